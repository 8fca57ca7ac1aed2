#include "nwdlens/nwd.hpp"

#include <cmath>

namespace nwdlens {

std::optional<Normalization> normalization_constant(const CountStats& ref_stats,
                                                    double factor) {
  if (!(ref_stats.mean > 0.0)) return std::nullopt;
  return Normalization{factor * ref_stats.mean, factor * ref_stats.stderr_};
}

PairCounts make_pair_counts(int year, const CountStats& u_stats,
                            const CountStats& v_stats, const CountStats& joint_stats,
                            const Normalization& normalization,
                            bool ref_single_sample) {
  PairCounts pc;
  pc.year = year;
  pc.u_stats = u_stats;
  pc.v_stats = v_stats;
  pc.joint_stats = joint_stats;
  const bool u_is_max = u_stats.mean >= v_stats.mean;  // tie goes to u
  const CountStats& mx = u_is_max ? u_stats : v_stats;
  const CountStats& mn = u_is_max ? v_stats : u_stats;
  pc.big_m = mx.mean;
  pc.big_m_stderr = mx.stderr_;
  pc.small_m = mn.mean;
  pc.small_m_stderr = mn.stderr_;
  pc.mu = joint_stats.mean;
  pc.big_n = normalization.value;
  pc.big_n_stderr = normalization.stderr_;
  pc.ref_single_sample = ref_single_sample;
  return pc;
}

std::vector<std::string> NwdFlags::names() const {
  std::vector<std::string> out;
  if (test(NwdFlag::OutOfUnitRange)) out.push_back("out_of_unit_range");
  if (test(NwdFlag::JointExceedsMin)) out.push_back("joint_exceeds_min");
  if (test(NwdFlag::UndefinedJointZero)) out.push_back("undefined_joint_zero");
  if (test(NwdFlag::UndefinedDomain)) out.push_back("undefined_domain");
  if (test(NwdFlag::PreCutoff)) out.push_back("pre_cutoff");
  if (test(NwdFlag::ArtifactYear)) out.push_back("artifact_year");
  if (test(NwdFlag::SingleSample)) out.push_back("single_sample");
  return out;
}

std::string NwdFlags::joined() const {
  std::string out;
  for (const std::string& name : names()) {
    if (!out.empty()) out.push_back('|');
    out += name;
  }
  return out;
}

NwdPoint compute_nwd(const PairCounts& pc) {
  NwdPoint pt;
  pt.year = pc.year;
  if (pc.u_stats.single_sample || pc.v_stats.single_sample ||
      pc.joint_stats.single_sample || pc.ref_single_sample) {
    pt.flags.set(NwdFlag::SingleSample);
  }
  if (!(pc.mu > 0.0)) pt.flags.set(NwdFlag::UndefinedJointZero);
  if (!(pc.small_m > 0.0) || pc.big_n <= pc.small_m) {
    pt.flags.set(NwdFlag::UndefinedDomain);
  }
  if (pt.flags.any_undefined()) return pt;

  const double value = (std::log(pc.big_m) - std::log(pc.mu)) /
                       (std::log(pc.big_n) - std::log(pc.small_m));
  pt.value = value;
  pt.stderr_ = propagate_error(pc);
  if (value < 0.0 || value > 1.0) pt.flags.set(NwdFlag::OutOfUnitRange);
  if (pc.mu > pc.small_m) pt.flags.set(NwdFlag::JointExceedsMin);
  return pt;
}

double propagate_error(const PairCounts& pc) {
  const double denom = std::log(pc.big_n) - std::log(pc.small_m);
  const double value = (std::log(pc.big_m) - std::log(pc.mu)) / denom;
  const double rM = pc.big_m_stderr / pc.big_m;
  const double rmu = pc.joint_stats.stderr_ / pc.mu;
  const double rm = pc.small_m_stderr / pc.small_m;
  const double rN = pc.big_n_stderr / pc.big_n;
  return std::sqrt(rM * rM + rmu * rmu + value * value * (rm * rm + rN * rN)) / denom;
}

std::optional<DeltaBreakdown> delta_decomposition(const PairCounts& pc_from,
                                                  const PairCounts& pc_to) {
  const NwdPoint from = compute_nwd(pc_from);
  const NwdPoint to = compute_nwd(pc_to);
  if (!from.value || !to.value) return std::nullopt;

  DeltaBreakdown b;
  b.year_from = pc_from.year;
  b.year_to = pc_to.year;
  const double nwd = *from.value;
  b.term_dM = (pc_to.big_m - pc_from.big_m) / pc_from.big_m;
  b.term_dmu = -(pc_to.mu - pc_from.mu) / pc_from.mu;
  b.term_dm = nwd * (pc_to.small_m - pc_from.small_m) / pc_from.small_m;
  b.term_dN = -nwd * (pc_to.big_n - pc_from.big_n) / pc_from.big_n;
  const double denom = std::log(pc_from.big_n) - std::log(pc_from.small_m);
  b.predicted_delta = (b.term_dM + b.term_dmu + b.term_dm + b.term_dN) / denom;
  b.exact_delta = *to.value - *from.value;
  return b;
}

}  // namespace nwdlens
