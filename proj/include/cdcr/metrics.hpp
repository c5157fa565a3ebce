#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cdcr/clustering.hpp"
#include "cdcr/corpus.hpp"

namespace cdcr {

struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  /// Set when a denominator was zero and the affected value defaulted to 0.
  bool degenerate = false;
};

/// Harmonic mean of precision and recall; 0 when both are 0.
double f1_of(double precision, double recall);

Score muc(const Clustering& key, const Clustering& response);
Score b_cubed(const Clustering& key, const Clustering& response);
Score ceaf_e(const Clustering& key, const Clustering& response);
/// Singletons carry one self-link. A singleton entity is fully resolved when
/// its mention exists on the other side; size-1 overlaps of larger entities
/// contribute no links.
Score lea(const Clustering& key, const Clustering& response);

/// Maximum-weight one-to-one assignment of rows to columns (rectangular
/// allowed, weights >= 0). Returns the column of each row, or -1.
std::vector<long> max_weight_assignment(const std::vector<std::vector<double>>& weights);

struct MetricReport {
  Score muc, b_cubed, ceaf_e, lea;
  double conll_f1 = 0.0;

  std::string to_json() const;
};

double conll_f1(const MetricReport& report);

/// All metrics on two partitions of the same universe; throws ValidationError
/// on coverage mismatch.
MetricReport evaluate(const Clustering& key, const Clustering& response);

/// Gold partition of all action mentions ("doc/mention" keys).
Clustering gold_clustering(const Corpus& corpus);

/// Evaluates a response over the whole corpus as one meta-document.
MetricReport cross_document_score(const Corpus& corpus, const Clustering& response);

/// Componentwise harmonic mean; 0 when any input component is 0.
Score harmonic_aggregate(std::span<const Score> scores);
double harmonic_mean(std::span<const double> values);

/// Componentwise arithmetic mean.
MetricReport mean_report(std::span<const MetricReport> reports);

/// One row per labeled report; metrics as column groups.
std::string metric_table_tsv(const std::vector<std::pair<std::string, MetricReport>>& rows);

/// CoNLL-style file: one line per element with its cluster in brackets.
void write_conll(std::ostream& out, const Clustering& clustering,
                 const std::string& document = "meta");
Clustering read_conll(std::istream& in);
void save_conll(const Clustering& clustering, const std::filesystem::path& path);
Clustering load_conll(const std::filesystem::path& path);

}  // namespace cdcr
