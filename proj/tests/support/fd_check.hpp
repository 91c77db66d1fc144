#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairdd/autodiff.hpp"

namespace fairdd::testsupport {

struct FdReport {
  bool ok = true;
  double worst_rel = 0.0;
  double worst_abs = 0.0;
  std::string where;
};

// Central-difference check of d(root)/d(param) against param->grad.
// Caller runs backward() first; this probe re-evaluates the graph in place
// and restores every perturbed entry. Gradient entries with magnitude below
// `abs_floor` on both sides are compared absolutely instead of relatively.
inline FdReport fd_check_param(const NodePtr& root, const NodePtr& param, double h = 1e-5,
                               double rel_tol = 1e-4, double abs_floor = 1e-8,
                               double abs_tol = 1e-7) {
  FdReport rep;
  Tensor& v = param->value;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double saved = v[i];
    v[i] = saved + h;
    recompute(root);
    const double fp = root->value.item();
    v[i] = saved - h;
    recompute(root);
    const double fm = root->value.item();
    v[i] = saved;
    recompute(root);

    const double fd = (fp - fm) / (2.0 * h);
    const double ad = param->grad.empty() ? 0.0 : param->grad[i];
    const double mag = std::max(std::fabs(fd), std::fabs(ad));
    const double abs_err = std::fabs(fd - ad);
    if (mag > abs_floor) {
      const double rel = abs_err / mag;
      rep.worst_rel = std::max(rep.worst_rel, rel);
      if (rel >= rel_tol) {
        rep.ok = false;
        rep.where = "entry " + std::to_string(i) + " ad=" + std::to_string(ad) +
                    " fd=" + std::to_string(fd);
      }
    } else {
      rep.worst_abs = std::max(rep.worst_abs, abs_err);
      if (abs_err >= abs_tol) {
        rep.ok = false;
        rep.where = "entry " + std::to_string(i) + " (small-grad) ad=" + std::to_string(ad) +
                    " fd=" + std::to_string(fd);
      }
    }
    if (!rep.ok) return rep;
  }
  return rep;
}

inline FdReport fd_check_params(const NodePtr& root, const std::vector<NodePtr>& params,
                                double h = 1e-5, double rel_tol = 1e-4) {
  FdReport worst;
  for (const auto& p : params) {
    FdReport rep = fd_check_param(root, p, h, rel_tol);
    worst.worst_rel = std::max(worst.worst_rel, rep.worst_rel);
    worst.worst_abs = std::max(worst.worst_abs, rep.worst_abs);
    if (!rep.ok) {
      worst.ok = false;
      worst.where = rep.where;
      return worst;
    }
  }
  return worst;
}

}  // namespace fairdd::testsupport
