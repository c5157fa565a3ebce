#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "cdcr/clustering.hpp"

namespace cdcr {

DistanceBuild build_distance_matrix(const PairModel& model, const FeatureExtractor& extractor,
                                    const std::vector<MentionRef>& refs,
                                    const std::vector<std::size_t>* groups, unsigned threads) {
  const Corpus& corpus = extractor.corpus();
  if (refs.size() < 2) throw InvalidArgument("distance matrix needs at least two mentions");
  if (groups && groups->size() != refs.size()) {
    throw InvalidArgument("group labels do not match the mention list");
  }

  std::map<MentionRef, std::size_t> rank;
  for (std::size_t i = 0; i < corpus.actions().size(); ++i) rank.emplace(corpus.actions()[i], i);
  std::vector<std::size_t> order(refs.size());
  for (std::size_t i = 0; i < refs.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return rank.at(refs[x]) < rank.at(refs[y]);
  });

  std::vector<std::size_t> columns;
  {
    std::unordered_map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < extractor.names().size(); ++i) by_name.emplace(extractor.names()[i], i);
    for (const std::string& name : model.schema()) {
      auto it = by_name.find(name);
      if (it == by_name.end()) {
        throw SchemaError("model feature '" + name + "' is not produced by the extractor");
      }
      columns.push_back(it->second);
    }
  }

  std::vector<MentionRef> sorted;
  std::vector<std::string> ids;
  std::vector<std::size_t> sorted_groups;
  for (std::size_t i : order) {
    sorted.push_back(refs[i]);
    ids.push_back(corpus.key(refs[i]));
    if (groups) sorted_groups.push_back((*groups)[i]);
  }

  DistanceBuild out{DistanceMatrix(std::move(ids)), 0};
  const std::size_t n = sorted.size();
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(n));

  std::atomic<std::size_t> next_row{0};
  std::atomic<std::uint64_t> predictions{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    try {
      FeatureVector projected;
      projected.values.resize(columns.size());
      projected.present.resize(columns.size());
      std::uint64_t local = 0;
      for (std::size_t i; (i = next_row.fetch_add(1)) < n;) {
        for (std::size_t j = i + 1; j < n; ++j) {
          if (groups && sorted_groups[i] != sorted_groups[j]) continue;
          const FeatureVector row = extractor.extract(sorted[i], sorted[j]);
          for (std::size_t c = 0; c < columns.size(); ++c) {
            projected.values[c] = row.values[columns[c]];
            projected.present[c] = row.present[columns[c]];
          }
          out.matrix.set(i, j, 1.0 - model.predict_proba(projected));
          ++local;
        }
      }
      predictions += local;
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next_row = n;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  out.predictions = predictions;
  return out;
}

}  // namespace cdcr
