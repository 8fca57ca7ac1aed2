#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nwdlens/store.hpp"

namespace nwdlens {

// N_y for one year: the reference term's year-windowed count times the
// configured factor (under the tree-ring model the windowed count *is*
// the annual increment). Error scales linearly.
struct Normalization {
  double value = 0.0;
  double stderr_ = 0.0;
};

// nullopt when the reference mean is 0 (normalization undefined).
std::optional<Normalization> normalization_constant(const CountStats& ref_stats,
                                                    double factor);

// The four inputs of the distance for one pair and year. big_m/small_m
// carry the stderr of whichever term attains the max/min; a tie in the
// means attributes the max to u and the min to v (the value is symmetric
// either way).
struct PairCounts {
  int year = 0;
  CountStats u_stats, v_stats, joint_stats;
  double big_m = 0.0;   // max(u_mean, v_mean)
  double small_m = 0.0; // min(u_mean, v_mean)
  double mu = 0.0;      // joint mean
  double big_n = 0.0;
  double big_m_stderr = 0.0;
  double small_m_stderr = 0.0;
  double big_n_stderr = 0.0;
  bool ref_single_sample = false;
};

PairCounts make_pair_counts(int year, const CountStats& u_stats,
                            const CountStats& v_stats, const CountStats& joint_stats,
                            const Normalization& normalization,
                            bool ref_single_sample = false);

enum class NwdFlag : unsigned {
  OutOfUnitRange = 1u << 0,     // value outside [0, 1]; kept, never clamped
  JointExceedsMin = 1u << 1,    // mu > min count; possible with estimates
  UndefinedJointZero = 1u << 2, // joint count 0
  UndefinedDomain = 1u << 3,    // min count 0 or N <= min count
  PreCutoff = 1u << 4,
  ArtifactYear = 1u << 5,
  SingleSample = 1u << 6,       // some input had n = 1
};

class NwdFlags {
 public:
  void set(NwdFlag f) { bits_ |= static_cast<unsigned>(f); }
  bool test(NwdFlag f) const { return (bits_ & static_cast<unsigned>(f)) != 0; }
  bool empty() const { return bits_ == 0; }
  bool any_undefined() const {
    return test(NwdFlag::UndefinedJointZero) || test(NwdFlag::UndefinedDomain);
  }
  // Canonical names, fixed order; "|"-joined in CSV output.
  std::vector<std::string> names() const;
  std::string joined() const;

  bool operator==(const NwdFlags&) const = default;

 private:
  unsigned bits_ = 0;
};

struct NwdPoint {
  int year = 0;
  std::optional<double> value;  // present iff no undefined_* flag
  double stderr_ = 0.0;         // delta-method; meaningful iff value
  NwdFlags flags;
};

// (ln M - ln mu) / (ln N - ln m), flagged per the NwdPoint rules.
// Degenerate inputs produce flagged/undefined points, never failures.
NwdPoint compute_nwd(const PairCounts& pc);

// Delta-method standard error treating M, mu, m, N as independent:
// sqrt((sM/M)^2 + (smu/mu)^2 + NWD^2 ((sm/m)^2 + (sN/N)^2)) / (ln N - ln m).
// Precondition: compute_nwd(pc) is defined.
double propagate_error(const PairCounts& pc);

// Year-over-year change split into its four sources. The stored terms are
// the numerator pieces; predicted_delta is their sum over (ln N - ln m),
// everything evaluated at the earlier year. exact_delta comes from the
// two NWD values independently.
struct DeltaBreakdown {
  int year_from = 0, year_to = 0;
  double term_dM = 0.0;   //  dM/M
  double term_dmu = 0.0;  // -dmu/mu
  double term_dm = 0.0;   //  NWD * dm/m
  double term_dN = 0.0;   // -NWD * dN/N
  double predicted_delta = 0.0;
  double exact_delta = 0.0;
};

// nullopt when the NWD is undefined at either year.
std::optional<DeltaBreakdown> delta_decomposition(const PairCounts& pc_from,
                                                  const PairCounts& pc_to);

}  // namespace nwdlens
