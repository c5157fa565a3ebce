// Timestamp and location resolution for an action mention, plus geography.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "cdcr/features.hpp"

namespace cdcr {

double geodesic_km(double lat_a, double lon_a, double lat_b, double lon_b) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double phi1 = lat_a * rad, phi2 = lat_b * rad;
  const double dphi = (lat_b - lat_a) * rad;
  const double dlambda = (lon_b - lon_a) * rad;
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) * std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

std::optional<int> geo_hierarchy_match(const EntityLink& a, const EntityLink& b, int cap) {
  std::vector<const std::string*> chain_a{&a.kb_id}, chain_b{&b.kb_id};
  // exporters may repeat the entity itself at the head of its hierarchy
  for (const auto& id : a.hierarchy)
    if (id != *chain_a.back()) chain_a.push_back(&id);
  for (const auto& id : b.hierarchy)
    if (id != *chain_b.back()) chain_b.push_back(&id);
  std::optional<int> best;
  for (std::size_t i = 0; i < chain_a.size(); ++i) {
    for (std::size_t j = 0; j < chain_b.size(); ++j) {
      const int steps = static_cast<int>(i + j);
      if (steps > cap || (best && steps >= *best)) continue;
      if (*chain_a[i] == *chain_b[j]) best = steps;
    }
  }
  return best;
}

std::array<std::int64_t, 5> temporal_distance_fields(std::int64_t seconds_a,
                                                     std::int64_t seconds_b) {
  const std::int64_t delta = seconds_a > seconds_b ? seconds_a - seconds_b : seconds_b - seconds_a;
  constexpr std::int64_t hour = 3600, day = 24 * hour;
  return {delta / (365 * day), delta / (30 * day), delta / (7 * day), delta / day, delta / hour};
}

namespace {

/// Spans of components attached to `action`: anchored gold components first,
/// then arguments of SRL frames whose predicate overlaps the action.
std::vector<SentenceSpan> component_spans(const Document& doc, const Mention& action,
                                          MentionKind kind, SrlRole role) {
  std::vector<SentenceSpan> gold;
  for (const Mention& m : doc.mentions) {
    if (m.kind == kind && m.anchor && *m.anchor == action.mention_id) gold.push_back(m.location());
  }
  std::sort(gold.begin(), gold.end(), [](const SentenceSpan& x, const SentenceSpan& y) {
    return std::tie(x.sentence, x.tokens.start) < std::tie(y.sentence, y.tokens.start);
  });
  for (const SrlFrame& f : doc.srl) {
    if (!f.predicate.overlaps(action.location())) continue;
    for (const SrlArgument& arg : f.args) {
      if (arg.role == role) gold.push_back(arg.span);
    }
  }
  return gold;
}

/// Positions of annotations in document order.
template <class T, class Pred>
std::vector<const T*> ordered(const std::vector<T>& items, Pred keep) {
  std::vector<const T*> out;
  for (const T& item : items) {
    if (keep(item)) out.push_back(&item);
  }
  std::stable_sort(out.begin(), out.end(), [](const T* x, const T* y) {
    return std::tie(x->sentence, x->token_span.start) < std::tie(y->sentence, y->token_span.start);
  });
  return out;
}

template <class T>
const T* overlapping(const std::vector<const T*>& items, const std::vector<SentenceSpan>& spans) {
  for (const SentenceSpan& span : spans) {
    for (const T* item : items) {
      if (item->location().overlaps(span)) return item;
    }
  }
  return nullptr;
}

template <class T>
const T* nearest_in_sentence(const std::vector<const T*>& items, const Mention& action) {
  const T* best = nullptr;
  std::int64_t best_distance = std::numeric_limits<std::int64_t>::max();
  for (const T* item : items) {
    if (item->sentence != action.sentence) continue;
    const std::int64_t d = std::llabs(static_cast<std::int64_t>(item->token_span.start) -
                                      static_cast<std::int64_t>(action.token_span.start));
    // items are in document order, so strict < keeps the earlier span on ties
    if (d < best_distance) {
      best = item;
      best_distance = d;
    }
  }
  return best;
}

template <class T>
const T* closest_preceding(const std::vector<const T*>& items, const Mention& action) {
  const T* best = nullptr;
  for (const T* item : items) {
    if (item->sentence >= action.sentence) break;
    best = item;
  }
  return best;
}

template <class T>
const T* resolve(const std::vector<const T*>& items, const Document& doc, const Mention& action,
                 int level, MentionKind kind, SrlRole role) {
  // level: 0 document, 1 srl, 2 sentence, 3 closest preceding, 4 overall
  switch (level) {
    case 0: return items.empty() ? nullptr : items.front();
    case 1: return overlapping(items, component_spans(doc, action, kind, role));
    case 2: return nearest_in_sentence(items, action);
    case 3: return closest_preceding(items, action);
    default:
      for (int fallback : {1, 2, 3}) {
        if (const T* hit = resolve(items, doc, action, fallback, kind, role)) return hit;
      }
      return nullptr;
  }
}

}  // namespace

std::optional<std::int64_t> resolve_time(const Document& doc, const Mention& action,
                                         TemporalLevel level) {
  if (level == TemporalLevel::document_publish) {
    if (!doc.publish_date) return std::nullopt;
    return doc.publish_date->minutes_since_epoch * 60;
  }
  const auto items = ordered(doc.timex, [](const TimexSpan&) { return true; });
  const TimexSpan* hit = resolve(items, doc, action, static_cast<int>(level) - 1,
                                 MentionKind::time, SrlRole::time);
  if (!hit) return std::nullopt;
  return parse_timestamp_seconds(hit->value);
}

const EntityLink* resolve_place(const Document& doc, const Mention& action, SpatialLevel level) {
  const auto items = ordered(doc.entity_links, [](const EntityLink& e) { return e.is_location(); });
  return resolve(items, doc, action, static_cast<int>(level), MentionKind::location,
                 SrlRole::location);
}

}  // namespace cdcr
