#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hicd::stats {

struct MannWhitney {
  double u = 0.0;  // U of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Midrank U with tie correction. Exact permutation p when |a|+|b| <= exact_limit, otherwise the
/// normal approximation with continuity correction.
MannWhitney mann_whitney_u(std::span<const double> a, std::span<const double> b, std::size_t exact_limit = 20);

/// Exact two-sided p by enumerating the permutation distribution of the pooled midranks.
double mann_whitney_exact_p(std::span<const double> a, std::span<const double> b);

/// Holm step-down adjustment, returned in input order.
std::vector<double> holm_adjust(std::span<const double> p);

double median(std::vector<double> v);

enum class Direction { Up, Down, Flat, Undefined };
std::string to_string(Direction d);

struct TransitionVerdict {
  std::size_t from = 0;  // bin index; to = from + 1
  double u = 0.0;
  double p_raw = 1.0;
  double p_adjusted = 1.0;
  Direction direction = Direction::Undefined;
};

/// Adjacent-bin comparisons Q1-Q2, Q2-Q3, Q3-Q4 with Holm correction over the defined tests.
/// A transition touching an empty bin is Undefined.
std::vector<TransitionVerdict> classify_transitions(const std::array<std::vector<double>, 4>& bins,
                                                    double alpha = 0.05);

/// At least one Up, no Down before the last Up, only Down/Flat after it. Undefined entries are
/// dropped first.
bool is_bell_like(std::span<const Direction> seq);

struct Prevalence {
  std::size_t settings = 0;
  std::size_t bell = 0;
  double bell_fraction = 0.0;
  double mixed_fraction = 0.0;
};
Prevalence bell_prevalence(const std::vector<std::vector<Direction>>& table);

}  // namespace hicd::stats
