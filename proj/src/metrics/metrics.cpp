#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

#include "cdcr/metrics.hpp"
#include "json.hpp"

namespace cdcr {

namespace {

/// Sparse overlap counts: overlaps[i] lists (response cluster, |k_i ∩ r_j|).
using Overlaps = std::vector<std::vector<std::pair<std::size_t, std::size_t>>>;

Overlaps overlaps(const Clustering& key, const Clustering& response) {
  const auto index = response.index();
  Overlaps out(key.size());
  for (std::size_t i = 0; i < key.size(); ++i) {
    std::map<std::size_t, std::size_t> counts;
    for (const auto& e : key.clusters[i]) {
      auto it = index.find(e);
      if (it != index.end()) ++counts[it->second];
    }
    out[i].assign(counts.begin(), counts.end());
  }
  return out;
}

Overlaps transpose(const Overlaps& o, std::size_t columns) {
  Overlaps t(columns);
  for (std::size_t i = 0; i < o.size(); ++i) {
    for (auto [j, n] : o[i]) t[j].emplace_back(i, n);
  }
  return t;
}

double ratio(double num, double den, bool& degenerate) {
  if (den == 0.0) {
    degenerate = true;
    return 0.0;
  }
  return num / den;
}

Score make_score(double p, double r, bool degenerate) { return {p, r, f1_of(p, r), degenerate}; }

// MUC recall side: sum(|k| - p(k)) / sum(|k| - 1); elements missing from the
// other side each count as their own partition.
std::pair<double, double> muc_side(const Clustering& key, const Overlaps& o) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const double size = static_cast<double>(key.clusters[i].size());
    std::size_t covered = 0;
    for (auto [_, n] : o[i]) covered += n;
    const double partitions = static_cast<double>(o[i].size() + (key.clusters[i].size() - covered));
    num += size - partitions;
    den += size - 1;
  }
  return {num, den};
}

double b_cubed_side(const Clustering& key, const Overlaps& o, bool& degenerate) {
  double sum = 0;
  for (std::size_t i = 0; i < key.size(); ++i) {
    for (auto [_, n] : o[i]) sum += static_cast<double>(n * n) / key.clusters[i].size();
  }
  return ratio(sum, static_cast<double>(key.element_count()), degenerate);
}

double links(std::size_t n) { return static_cast<double>(n) * static_cast<double>(n - 1) / 2.0; }

double lea_side(const Clustering& key, const Overlaps& o, bool& degenerate) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const std::size_t size = key.clusters[i].size();
    double resolution = 0;
    if (size == 1) {
      resolution = o[i].empty() ? 0.0 : 1.0;
    } else {
      for (auto [_, n] : o[i]) resolution += links(n);
      resolution /= links(size);
    }
    num += static_cast<double>(size) * resolution;
    den += static_cast<double>(size);
  }
  return ratio(num, den, degenerate);
}

/// Hungarian algorithm (potentials form) minimizing cost for rows <= cols.
std::vector<long> hungarian_min(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size(), m = n ? cost[0].size() : 0;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0), v(m + 1, 0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<long> row_to_col(n, -1);
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j]) row_to_col[p[j] - 1] = static_cast<long>(j - 1);
  }
  return row_to_col;
}

}  // namespace

double f1_of(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

std::vector<long> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
  const std::size_t rows = weights.size(), cols = rows ? weights[0].size() : 0;
  if (rows == 0 || cols == 0) return std::vector<long>(rows, -1);
  const bool flip = rows > cols;
  const std::size_t n = flip ? cols : rows, m = flip ? rows : cols;
  std::vector<std::vector<double>> cost(n, std::vector<double>(m));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) cost[i][j] = -(flip ? weights[j][i] : weights[i][j]);
  }
  const auto assigned = hungarian_min(cost);
  if (!flip) return assigned;
  std::vector<long> out(rows, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (assigned[i] >= 0) out[static_cast<std::size_t>(assigned[i])] = static_cast<long>(i);
  }
  return out;
}

Score muc(const Clustering& key, const Clustering& response) {
  const auto [rn, rd] = muc_side(key, overlaps(key, response));
  const auto [pn, pd] = muc_side(response, overlaps(response, key));
  bool degenerate = false;
  const double r = ratio(rn, rd, degenerate);
  const double p = ratio(pn, pd, degenerate);
  return make_score(p, r, degenerate);
}

Score b_cubed(const Clustering& key, const Clustering& response) {
  const Overlaps o = overlaps(key, response);
  bool degenerate = false;
  const double r = b_cubed_side(key, o, degenerate);
  const double p = b_cubed_side(response, transpose(o, response.size()), degenerate);
  return make_score(p, r, degenerate);
}

Score ceaf_e(const Clustering& key, const Clustering& response) {
  const Overlaps o = overlaps(key, response);
  // Entities only interact through shared mentions, so the assignment splits
  // into independent problems over connected components of the overlap graph.
  const std::size_t nk = key.size(), nr = response.size();
  UnionFind uf(nk + nr);
  for (std::size_t i = 0; i < nk; ++i) {
    for (auto [j, _] : o[i]) uf.unite(i, nk + j);
  }
  std::map<std::size_t, std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> parts;
  for (std::size_t i = 0; i < nk; ++i) {
    if (!o[i].empty()) parts[uf.find(i)].first.push_back(i);
  }
  for (std::size_t j = 0; j < nr; ++j) parts[uf.find(nk + j)].second.push_back(j);
  double similarity = 0;
  for (const auto& [_, part] : parts) {
    const auto& [rows, cols] = part;
    if (rows.empty() || cols.empty()) continue;
    std::map<std::size_t, std::size_t> col_index;
    for (std::size_t c = 0; c < cols.size(); ++c) col_index[cols[c]] = c;
    std::vector<std::vector<double>> w(rows.size(), std::vector<double>(cols.size(), 0.0));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const double ks = static_cast<double>(key.clusters[rows[r]].size());
      for (auto [j, n] : o[rows[r]]) {
        const double rs = static_cast<double>(response.clusters[j].size());
        w[r][col_index.at(j)] = 2.0 * static_cast<double>(n) / (ks + rs);
      }
    }
    const auto match = max_weight_assignment(w);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (match[r] >= 0) similarity += w[r][static_cast<std::size_t>(match[r])];
    }
  }
  bool degenerate = false;
  const double r = ratio(similarity, static_cast<double>(nk), degenerate);
  const double p = ratio(similarity, static_cast<double>(nr), degenerate);
  return make_score(p, r, degenerate);
}

Score lea(const Clustering& key, const Clustering& response) {
  const Overlaps o = overlaps(key, response);
  bool degenerate = false;
  const double r = lea_side(key, o, degenerate);
  const double p = lea_side(response, transpose(o, response.size()), degenerate);
  return make_score(p, r, degenerate);
}

double conll_f1(const MetricReport& report) {
  return (report.muc.f1 + report.b_cubed.f1 + report.ceaf_e.f1) / 3.0;
}

MetricReport evaluate(const Clustering& key, const Clustering& response) {
  key.validate();
  response.validate();
  if (key.universe() != response.universe()) {
    throw ValidationError("key and response cover different mention sets (" +
                          std::to_string(key.element_count()) + " vs " +
                          std::to_string(response.element_count()) + " mentions)");
  }
  MetricReport r;
  r.muc = muc(key, response);
  r.b_cubed = b_cubed(key, response);
  r.ceaf_e = ceaf_e(key, response);
  r.lea = lea(key, response);
  r.conll_f1 = conll_f1(r);
  return r;
}

Clustering gold_clustering(const Corpus& corpus) {
  std::vector<std::string> keys, labels;
  for (MentionRef ref : corpus.actions()) {
    keys.push_back(corpus.key(ref));
    labels.push_back(corpus.cluster_of(ref));
  }
  return Clustering::from_labels(keys, labels);
}

MetricReport cross_document_score(const Corpus& corpus, const Clustering& response) {
  return evaluate(gold_clustering(corpus), response);
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double inv = 0;
  for (double v : values) {
    if (v <= 0) return 0.0;
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

Score harmonic_aggregate(std::span<const Score> scores) {
  std::vector<double> p, r, f;
  Score out;
  for (const Score& s : scores) {
    p.push_back(s.precision);
    r.push_back(s.recall);
    f.push_back(s.f1);
    out.degenerate |= s.degenerate;
  }
  out.precision = harmonic_mean(p);
  out.recall = harmonic_mean(r);
  out.f1 = harmonic_mean(f);
  return out;
}

MetricReport mean_report(std::span<const MetricReport> reports) {
  MetricReport m;
  if (reports.empty()) return m;
  const double n = static_cast<double>(reports.size());
  auto add = [&](Score& into, const Score& s) {
    into.precision += s.precision / n;
    into.recall += s.recall / n;
    into.f1 += s.f1 / n;
    into.degenerate |= s.degenerate;
  };
  for (const MetricReport& r : reports) {
    add(m.muc, r.muc);
    add(m.b_cubed, r.b_cubed);
    add(m.ceaf_e, r.ceaf_e);
    add(m.lea, r.lea);
    m.conll_f1 += r.conll_f1 / n;
  }
  return m;
}

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  auto score = [](const Score& s) {
    nlohmann::ordered_json o;
    o["P"] = s.precision;
    o["R"] = s.recall;
    o["F1"] = s.f1;
    if (s.degenerate) o["degenerate"] = true;
    return o;
  };
  j["MUC"] = score(muc);
  j["B3"] = score(b_cubed);
  j["CEAFe"] = score(ceaf_e);
  j["LEA"] = score(lea);
  j["CoNLL_F1"] = conll_f1;
  return j.dump();
}

std::string metric_table_tsv(const std::vector<std::pair<std::string, MetricReport>>& rows) {
  std::ostringstream out;
  out << "run";
  for (const char* m : {"MUC", "B3", "CEAFe", "LEA"}) {
    out << '\t' << m << "_P\t" << m << "_R\t" << m << "_F1";
  }
  out << "\tCoNLL_F1\n" << std::fixed << std::setprecision(4);
  for (const auto& [label, r] : rows) {
    out << label;
    for (const Score* s : {&r.muc, &r.b_cubed, &r.ceaf_e, &r.lea}) {
      out << '\t' << 100 * s->precision << '\t' << 100 * s->recall << '\t' << 100 * s->f1;
    }
    out << '\t' << 100 * r.conll_f1 << '\n';
  }
  return out.str();
}

void write_conll(std::ostream& out, const Clustering& clustering, const std::string& document) {
  const auto index = clustering.index();
  out << "#begin document (" << document << "); part 000\n";
  std::size_t line = 0;
  for (const std::string& e : clustering.universe()) {
    out << document << "\t0\t" << line++ << '\t' << e << "\t(" << index.at(e) << ")\n";
  }
  out << "#end document\n";
}

Clustering read_conll(std::istream& in) {
  std::map<std::string, std::vector<std::string>> groups;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty() || text[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream row(text);
    for (std::string f; row >> f;) fields.push_back(f);
    if (fields.size() < 5) {
      throw ParseError("conll line " + std::to_string(line_no) + ": expected 5 columns");
    }
    const std::string& token = fields[3];
    const std::string& tag = fields.back();
    if (tag == "-") {
      groups["\x1f" + token].push_back(token);
      continue;
    }
    if (tag.size() < 3 || tag.front() != '(' || tag.back() != ')' ||
        tag.find('|') != std::string::npos) {
      throw ParseError("conll line " + std::to_string(line_no) + ": unsupported cluster tag '" +
                       tag + "'");
    }
    groups[tag.substr(1, tag.size() - 2)].push_back(token);
  }
  std::vector<std::vector<std::string>> clusters;
  for (auto& [_, members] : groups) clusters.push_back(std::move(members));
  Clustering c(std::move(clusters));
  c.validate();
  return c;
}

void save_conll(const Clustering& clustering, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  write_conll(out, clustering);
}

Clustering load_conll(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_conll(in);
}

}  // namespace cdcr
