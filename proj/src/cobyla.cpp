#include "emohead/cobyla.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "emohead/errors.hpp"

// Port of Powell's COBYLA (1992). Indices inside the two routines follow the
// original 1-based numbering through small accessor lambdas; constraint
// numbers stored in `iact` are 1-based as well, with m+1 standing for the
// objective.

namespace emohead {

namespace {

struct Workspace {
  int n = 0;
  int m = 0;
  std::vector<double> a;       // n x (m+1): constraint gradients, then -grad f
  std::vector<double> z;       // n x n
  std::vector<double> zdota;   // n
  std::vector<double> vmultc;  // m+1
  std::vector<double> sdirn;   // n
  std::vector<double> dxnew;   // n
  std::vector<double> vmultd;  // m+1
  std::vector<int> iact;       // m+1

  Workspace(int n_, int m_)
      : n(n_), m(m_), a(static_cast<std::size_t>(n_ * (m_ + 1))), z(static_cast<std::size_t>(n_ * n_)),
        zdota(static_cast<std::size_t>(n_)), vmultc(static_cast<std::size_t>(m_ + 1)),
        sdirn(static_cast<std::size_t>(n_)), dxnew(static_cast<std::size_t>(n_)),
        vmultd(static_cast<std::size_t>(m_ + 1)), iact(static_cast<std::size_t>(m_ + 1)) {}
};

// Computes the trust-region step dx (|dx| <= rho). Stage one minimizes the
// greatest violation of the linearized constraints A(.,k)^T dx >= b(k);
// stage two uses any remaining freedom to decrease the linearized objective
// without increasing that violation. Returns ifull: 1 when dx reaches the
// trust-region boundary or the stage-two solution, 0 when degeneracy stopped
// it early.
int trstlp(Workspace& w, const std::vector<double>& b_in, double rho, std::vector<double>& dx_in) {
  const int n = w.n;
  const int m = w.m;
  auto a = [&](int i, int k) -> double& { return w.a[static_cast<std::size_t>((i - 1) * (m + 1) + (k - 1))]; };
  auto z = [&](int i, int k) -> double& { return w.z[static_cast<std::size_t>((i - 1) * n + (k - 1))]; };
  auto b = [&](int k) -> double { return b_in[static_cast<std::size_t>(k - 1)]; };
  auto dx = [&](int i) -> double& { return dx_in[static_cast<std::size_t>(i - 1)]; };
  auto zdota = [&](int k) -> double& { return w.zdota[static_cast<std::size_t>(k - 1)]; };
  auto vmultc = [&](int k) -> double& { return w.vmultc[static_cast<std::size_t>(k - 1)]; };
  auto vmultd = [&](int k) -> double& { return w.vmultd[static_cast<std::size_t>(k - 1)]; };
  auto sdirn = [&](int i) -> double& { return w.sdirn[static_cast<std::size_t>(i - 1)]; };
  auto dxnew = [&](int i) -> double& { return w.dxnew[static_cast<std::size_t>(i - 1)]; };
  auto iact = [&](int k) -> int& { return w.iact[static_cast<std::size_t>(k - 1)]; };

  int ifull = 1;
  int mcon = m;
  int nact = 0;
  int icon = 0;
  int nactx = 0;
  int icount = 0;
  int k = 0, kk = 0, kp = 0, kw = 0, kl = 0, isave = 0;
  double resmax = 0.0, resold = 0.0, optold = 0.0, optnew = 0.0, tot = 0.0, temp = 0.0;
  double alpha = 0.0, beta = 0.0, sp = 0.0, spabs = 0.0, acca = 0.0, accb = 0.0, ratio = 0.0;
  double zdotv = 0.0, zdvabs = 0.0, vsave = 0.0, dd = 0.0, ss = 0.0, sd = 0.0, stpful = 0.0, step = 0.0;
  double zdotw = 0.0, zdwabs = 0.0, sum = 0.0, sumabs = 0.0, tempa = 0.0;

  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) z(i, j) = 0.0;
    z(i, i) = 1.0;
    dx(i) = 0.0;
  }
  if (m >= 1) {
    for (k = 1; k <= m; ++k) {
      if (b(k) > resmax) {
        resmax = b(k);
        icon = k;
      }
    }
    for (k = 1; k <= m; ++k) {
      iact(k) = k;
      vmultc(k) = resmax - b(k);
    }
  }
  if (resmax == 0.0) goto switch_to_stage_two;
  for (int i = 1; i <= n; ++i) sdirn(i) = 0.0;

  // Three consecutive iterations without reducing the stage objective or
  // growing the active set end the stage (guards against cycling).
reset_progress:
  optold = 0.0;
  icount = 0;

iterate:
  if (mcon == m) {
    optnew = resmax;
  } else {
    optnew = 0.0;
    for (int i = 1; i <= n; ++i) optnew -= dx(i) * a(i, mcon);
  }
  if (icount == 0 || optnew < optold) {
    optold = optnew;
    nactx = nact;
    icount = 3;
  } else if (nact > nactx) {
    nactx = nact;
    icount = 3;
  } else {
    --icount;
    if (icount == 0) goto stage_finished;
  }

  // Add constraint iact(icon) to the active set with Givens rotations that
  // keep the trailing columns of z orthogonal to its gradient.
  if (icon <= nact) goto delete_constraint;
  kk = iact(icon);
  for (int i = 1; i <= n; ++i) dxnew(i) = a(i, kk);
  tot = 0.0;
  for (k = n; k > nact; --k) {
    sp = 0.0;
    spabs = 0.0;
    for (int i = 1; i <= n; ++i) {
      temp = z(i, k) * dxnew(i);
      sp += temp;
      spabs += std::abs(temp);
    }
    acca = spabs + 0.1 * std::abs(sp);
    accb = spabs + 0.2 * std::abs(sp);
    if (spabs >= acca || acca >= accb) sp = 0.0;
    if (tot == 0.0) {
      tot = sp;
    } else {
      kp = k + 1;
      temp = std::sqrt(sp * sp + tot * tot);
      alpha = sp / temp;
      beta = tot / temp;
      tot = temp;
      for (int i = 1; i <= n; ++i) {
        temp = alpha * z(i, k) + beta * z(i, kp);
        z(i, kp) = alpha * z(i, kp) - beta * z(i, k);
        z(i, k) = temp;
      }
    }
  }

  if (tot != 0.0) {
    ++nact;
    zdota(nact) = tot;
    vmultc(icon) = vmultc(nact);
    vmultc(nact) = 0.0;
    goto update_active_list;
  }

  // The new gradient is a combination of the active ones: find the active
  // constraint to drop (smallest multiplier ratio).
  ratio = -1.0;
  for (k = nact; k >= 1; --k) {
    zdotv = 0.0;
    zdvabs = 0.0;
    for (int i = 1; i <= n; ++i) {
      temp = z(i, k) * dxnew(i);
      zdotv += temp;
      zdvabs += std::abs(temp);
    }
    acca = zdvabs + 0.1 * std::abs(zdotv);
    accb = zdvabs + 0.2 * std::abs(zdotv);
    if (zdvabs < acca && acca < accb) {
      temp = zdotv / zdota(k);
      if (temp > 0.0 && iact(k) <= m) {
        tempa = vmultc(k) / temp;
        if (ratio < 0.0 || tempa < ratio) ratio = tempa;
      }
      if (k >= 2) {
        kw = iact(k);
        for (int i = 1; i <= n; ++i) dxnew(i) -= temp * a(i, kw);
      }
      vmultd(k) = temp;
    } else {
      vmultd(k) = 0.0;
    }
  }
  if (ratio < 0.0) goto stage_finished;

  for (k = 1; k <= nact; ++k) vmultc(k) = std::max(0.0, vmultc(k) - ratio * vmultd(k));
  if (icon < nact) {
    isave = iact(icon);
    vsave = vmultc(icon);
    k = icon;
    do {
      kp = k + 1;
      kw = iact(kp);
      sp = 0.0;
      for (int i = 1; i <= n; ++i) sp += z(i, k) * a(i, kw);
      temp = std::sqrt(sp * sp + zdota(kp) * zdota(kp));
      alpha = zdota(kp) / temp;
      beta = sp / temp;
      zdota(kp) = alpha * zdota(k);
      zdota(k) = temp;
      for (int i = 1; i <= n; ++i) {
        temp = alpha * z(i, kp) + beta * z(i, k);
        z(i, kp) = alpha * z(i, k) - beta * z(i, kp);
        z(i, k) = temp;
      }
      iact(k) = kw;
      vmultc(k) = vmultc(kp);
      k = kp;
    } while (k < nact);
    iact(k) = isave;
    vmultc(k) = vsave;
  }
  temp = 0.0;
  for (int i = 1; i <= n; ++i) temp += z(i, nact) * a(i, kk);
  if (temp == 0.0) goto stage_finished;
  zdota(nact) = temp;
  vmultc(icon) = 0.0;
  vmultc(nact) = ratio;

update_active_list:
  // In stage two the objective stays the last active constraint.
  iact(icon) = iact(nact);
  iact(nact) = kk;
  if (mcon > m && kk != mcon) {
    k = nact - 1;
    sp = 0.0;
    for (int i = 1; i <= n; ++i) sp += z(i, k) * a(i, kk);
    temp = std::sqrt(sp * sp + zdota(nact) * zdota(nact));
    alpha = zdota(nact) / temp;
    beta = sp / temp;
    zdota(nact) = alpha * zdota(k);
    zdota(k) = temp;
    for (int i = 1; i <= n; ++i) {
      temp = alpha * z(i, nact) + beta * z(i, k);
      z(i, nact) = alpha * z(i, k) - beta * z(i, nact);
      z(i, k) = temp;
    }
    iact(nact) = iact(k);
    iact(k) = kk;
    temp = vmultc(k);
    vmultc(k) = vmultc(nact);
    vmultc(nact) = temp;
  }
  if (mcon > m) goto stage_two_direction;
  kk = iact(nact);
  temp = 0.0;
  for (int i = 1; i <= n; ++i) temp += sdirn(i) * a(i, kk);
  temp = (temp - 1.0) / zdota(nact);
  for (int i = 1; i <= n; ++i) sdirn(i) -= temp * z(i, nact);
  goto take_step;

delete_constraint:
  if (icon < nact) {
    isave = iact(icon);
    vsave = vmultc(icon);
    k = icon;
    do {
      kp = k + 1;
      kk = iact(kp);
      sp = 0.0;
      for (int i = 1; i <= n; ++i) sp += z(i, k) * a(i, kk);
      temp = std::sqrt(sp * sp + zdota(kp) * zdota(kp));
      alpha = zdota(kp) / temp;
      beta = sp / temp;
      zdota(kp) = alpha * zdota(k);
      zdota(k) = temp;
      for (int i = 1; i <= n; ++i) {
        temp = alpha * z(i, kp) + beta * z(i, k);
        z(i, kp) = alpha * z(i, k) - beta * z(i, kp);
        z(i, k) = temp;
      }
      iact(k) = kk;
      vmultc(k) = vmultc(kp);
      k = kp;
    } while (k < nact);
    iact(k) = isave;
    vmultc(k) = vsave;
  }
  --nact;
  if (mcon > m) goto stage_two_direction;
  temp = 0.0;
  for (int i = 1; i <= n; ++i) temp += sdirn(i) * z(i, nact + 1);
  for (int i = 1; i <= n; ++i) sdirn(i) -= temp * z(i, nact + 1);
  goto take_step;

stage_two_direction:
  temp = 1.0 / zdota(nact);
  for (int i = 1; i <= n; ++i) sdirn(i) = temp * z(i, nact);

take_step:
  // Step to the trust-region boundary, or just far enough to zero resmax.
  dd = rho * rho;
  sd = 0.0;
  ss = 0.0;
  for (int i = 1; i <= n; ++i) {
    if (std::abs(dx(i)) >= 1.0e-6 * rho) dd -= dx(i) * dx(i);
    sd += dx(i) * sdirn(i);
    ss += sdirn(i) * sdirn(i);
  }
  if (dd <= 0.0) goto stage_finished;
  temp = std::sqrt(ss * dd);
  if (std::abs(sd) >= 1.0e-6 * temp) temp = std::sqrt(ss * dd + sd * sd);
  stpful = dd / (temp + sd);
  step = stpful;
  if (mcon == m) {
    acca = step + 0.1 * resmax;
    accb = step + 0.2 * resmax;
    if (step >= acca || acca >= accb) goto switch_to_stage_two;
    step = std::min(step, resmax);
  }

  for (int i = 1; i <= n; ++i) dxnew(i) = dx(i) + step * sdirn(i);
  if (mcon == m) {
    resold = resmax;
    resmax = 0.0;
    for (k = 1; k <= nact; ++k) {
      kk = iact(k);
      temp = b(kk);
      for (int i = 1; i <= n; ++i) temp -= a(i, kk) * dxnew(i);
      resmax = std::max(resmax, temp);
    }
  }

  // Multipliers that would hold at dxnew; rounding-level values forced to 0.
  for (k = nact; k >= 1; --k) {
    zdotw = 0.0;
    zdwabs = 0.0;
    for (int i = 1; i <= n; ++i) {
      temp = z(i, k) * dxnew(i);
      zdotw += temp;
      zdwabs += std::abs(temp);
    }
    acca = zdwabs + 0.1 * std::abs(zdotw);
    accb = zdwabs + 0.2 * std::abs(zdotw);
    if (zdwabs >= acca || acca >= accb) zdotw = 0.0;
    vmultd(k) = zdotw / zdota(k);
    if (k >= 2) {
      kk = iact(k);
      for (int i = 1; i <= n; ++i) dxnew(i) -= vmultd(k) * a(i, kk);
    }
  }
  if (mcon > m) vmultd(nact) = std::max(0.0, vmultd(nact));

  for (int i = 1; i <= n; ++i) dxnew(i) = dx(i) + step * sdirn(i);
  if (mcon > nact) {
    kl = nact + 1;
    for (k = kl; k <= mcon; ++k) {
      kk = iact(k);
      sum = resmax - b(kk);
      sumabs = resmax + std::abs(b(kk));
      for (int i = 1; i <= n; ++i) {
        temp = a(i, kk) * dxnew(i);
        sum += temp;
        sumabs += std::abs(temp);
      }
      acca = sumabs + 0.1 * std::abs(sum);
      accb = sumabs + 0.2 * std::abs(sum);
      if (sumabs >= acca || acca >= accb) sum = 0.0;
      vmultd(k) = sum;
    }
  }

  // Fraction of the step that keeps every multiplier/residual nonnegative.
  ratio = 1.0;
  icon = 0;
  for (k = 1; k <= mcon; ++k) {
    if (vmultd(k) < 0.0) {
      temp = vmultc(k) / (vmultc(k) - vmultd(k));
      if (temp < ratio) {
        ratio = temp;
        icon = k;
      }
    }
  }

  temp = 1.0 - ratio;
  for (int i = 1; i <= n; ++i) dx(i) = temp * dx(i) + ratio * dxnew(i);
  for (k = 1; k <= mcon; ++k) vmultc(k) = std::max(0.0, temp * vmultc(k) + ratio * vmultd(k));
  if (mcon == m) resmax = resold + ratio * (resmax - resold);

  if (icon > 0) goto iterate;
  if (step == stpful) return ifull;

switch_to_stage_two:
  mcon = m + 1;
  icon = mcon;
  iact(mcon) = mcon;
  vmultc(mcon) = 0.0;
  goto reset_progress;

stage_finished:
  if (mcon == m) goto switch_to_stage_two;
  ifull = 0;
  return ifull;
}

// Records every evaluation and keeps the best feasible point (lowest f) and
// the least violating one.
class Tracker {
 public:
  Tracker(const CobylaFunction& fn, std::size_t m, double tol) : fn_(fn), con_(m), tol_(tol) {}

  double eval(std::span<const double> x, std::span<double> con, double& maxcv) {
    const double f = fn_(x, con);
    maxcv = 0.0;
    for (const double c : con) maxcv = std::max(maxcv, -c);
    if (!std::isfinite(f)) throw NumericError("cobyla: objective returned a non-finite value");
    ++count_;
    const bool feasible = maxcv <= tol_;
    if (feasible && (!best_feasible_ || f < best_f_)) {
      best_feasible_ = true;
      best_f_ = f;
      best_x_.assign(x.begin(), x.end());
      best_cv_ = maxcv;
    } else if (!best_feasible_ && (least_x_.empty() || maxcv < least_cv_ || (maxcv == least_cv_ && f < least_f_))) {
      least_x_.assign(x.begin(), x.end());
      least_cv_ = maxcv;
      least_f_ = f;
    }
    return f;
  }

  std::size_t count() const { return count_; }

  CobylaResult result() const {
    CobylaResult r;
    r.evaluations = count_;
    r.feasible = best_feasible_;
    if (best_feasible_) {
      r.x = best_x_;
      r.f = best_f_;
      r.max_violation = best_cv_;
    } else {
      r.x = least_x_;
      r.f = least_f_;
      r.max_violation = least_cv_;
    }
    return r;
  }

 private:
  const CobylaFunction& fn_;
  std::vector<double> con_;
  double tol_;
  std::size_t count_ = 0;
  bool best_feasible_ = false;
  double best_f_ = 0.0, best_cv_ = 0.0;
  std::vector<double> best_x_;
  double least_f_ = 0.0, least_cv_ = std::numeric_limits<double>::infinity();
  std::vector<double> least_x_;
};

}  // namespace

CobylaResult cobyla_minimize(const CobylaFunction& fn, std::size_t num_constraints, std::vector<double> x0,
                             const CobylaOptions& options) {
  const int n = static_cast<int>(x0.size());
  const int m = static_cast<int>(num_constraints);
  if (n == 0) throw DimensionError("cobyla: empty starting point");
  if (!(options.rho_end > 0.0) || !(options.rho_begin > options.rho_end)) {
    throw DomainError("cobyla: need rho_begin > rho_end > 0");
  }
  if (options.max_evals < static_cast<std::size_t>(n) + 2) throw DomainError("cobyla: max_evals must be >= n + 2");

  const int np = n + 1;
  const int mp = m + 1;
  const int mpp = m + 2;
  Workspace ws(n, m);
  Tracker tracker(fn, static_cast<std::size_t>(m), options.feasibility_tol);

  // sim: n x (n+1); column np is the best vertex, columns 1..n the offsets
  // of the other vertices from it. simi: inverse of sim's leading n x n.
  // datmat: (m+2) x (n+1) holding constraints, f and max violation per vertex.
  std::vector<double> sim_v(static_cast<std::size_t>(n * np)), simi_v(static_cast<std::size_t>(n * n));
  std::vector<double> datmat_v(static_cast<std::size_t>(mpp * np));
  std::vector<double> con_v(static_cast<std::size_t>(mpp)), vsig_v(static_cast<std::size_t>(n));
  std::vector<double> veta_v(static_cast<std::size_t>(n)), sigbar_v(static_cast<std::size_t>(n));
  std::vector<double> dx_v(static_cast<std::size_t>(n)), w_v(static_cast<std::size_t>(n));
  std::vector<double>& x_v = x0;

  auto sim = [&](int i, int j) -> double& { return sim_v[static_cast<std::size_t>((i - 1) * np + (j - 1))]; };
  auto simi = [&](int i, int j) -> double& { return simi_v[static_cast<std::size_t>((i - 1) * n + (j - 1))]; };
  auto datmat = [&](int k, int j) -> double& { return datmat_v[static_cast<std::size_t>((k - 1) * np + (j - 1))]; };
  auto a = [&](int i, int k) -> double& { return ws.a[static_cast<std::size_t>((i - 1) * (m + 1) + (k - 1))]; };
  auto con = [&](int k) -> double& { return con_v[static_cast<std::size_t>(k - 1)]; };
  auto x = [&](int i) -> double& { return x_v[static_cast<std::size_t>(i - 1)]; };
  auto vsig = [&](int j) -> double& { return vsig_v[static_cast<std::size_t>(j - 1)]; };
  auto veta = [&](int j) -> double& { return veta_v[static_cast<std::size_t>(j - 1)]; };
  auto sigbar = [&](int j) -> double& { return sigbar_v[static_cast<std::size_t>(j - 1)]; };
  auto dx = [&](int i) -> double& { return dx_v[static_cast<std::size_t>(i - 1)]; };
  auto w = [&](int i) -> double& { return w_v[static_cast<std::size_t>(i - 1)]; };

  const double alpha = 0.25, beta = 2.1, gamma = 0.5, delta = 1.1;
  double rho = options.rho_begin;
  double parmu = 0.0;
  CobylaStatus status = CobylaStatus::kConverged;

  int jdrop = np, ibrnch = 0, nbest = 0, iflag = 0, ifull = 0, l = 0;
  double f = 0.0, resmax = 0.0, phimin = 0.0, temp = 0.0, tempa = 0.0, error = 0.0;
  double parsig = 0.0, pareta = 0.0, wsig = 0.0, weta = 0.0, cvmaxp = 0.0, cvmaxm = 0.0, sum = 0.0;
  double dxsign = 0.0, resnew = 0.0, barmu = 0.0, phi = 0.0, prerec = 0.0, prerem = 0.0;
  double vmold = 0.0, vmnew = 0.0, trured = 0.0, ratio = 0.0, edgmax = 0.0, denom = 0.0, cmin = 0.0, cmax = 0.0;
  std::vector<double> trial_con(static_cast<std::size_t>(m));

  temp = 1.0 / rho;
  for (int i = 1; i <= n; ++i) {
    sim(i, np) = x(i);
    for (int j = 1; j <= n; ++j) simi(i, j) = 0.0;
    sim(i, i) = rho;
    simi(i, i) = temp;
  }

evaluate:
  if (tracker.count() >= options.max_evals && tracker.count() > 0) {
    status = CobylaStatus::kMaxEvals;
    goto finish;
  }
  f = tracker.eval(x_v, trial_con, resmax);
  for (int k = 1; k <= m; ++k) con(k) = trial_con[static_cast<std::size_t>(k - 1)];
  con(mp) = f;
  con(mpp) = resmax;
  if (ibrnch == 1) goto assess_trial;

  // Building the initial simplex.
  for (int k = 1; k <= mpp; ++k) datmat(k, jdrop) = con(k);
  if (static_cast<int>(tracker.count()) > np) goto simplex_ready;
  if (jdrop <= n) {
    if (datmat(mp, np) <= f) {
      x(jdrop) = sim(jdrop, np);
    } else {
      sim(jdrop, np) = x(jdrop);
      for (int k = 1; k <= mpp; ++k) {
        datmat(k, jdrop) = datmat(k, np);
        datmat(k, np) = con(k);
      }
      for (int k = 1; k <= jdrop; ++k) {
        sim(jdrop, k) = -rho;
        temp = 0.0;
        for (int i = k; i <= jdrop; ++i) temp -= simi(i, k);
        simi(jdrop, k) = temp;
      }
    }
  }
  if (static_cast<int>(tracker.count()) <= n) {
    jdrop = static_cast<int>(tracker.count());
    x(jdrop) += rho;
    goto evaluate;
  }

simplex_ready:
  ibrnch = 1;

select_best_vertex:
  // Move the vertex with the least merit f + parmu * maxcv into column np.
  phimin = datmat(mp, np) + parmu * datmat(mpp, np);
  nbest = np;
  for (int j = 1; j <= n; ++j) {
    temp = datmat(mp, j) + parmu * datmat(mpp, j);
    if (temp < phimin) {
      nbest = j;
      phimin = temp;
    } else if (temp == phimin && parmu == 0.0 && datmat(mpp, j) < datmat(mpp, nbest)) {
      nbest = j;
    }
  }
  if (nbest <= n) {
    for (int i = 1; i <= mpp; ++i) {
      temp = datmat(i, np);
      datmat(i, np) = datmat(i, nbest);
      datmat(i, nbest) = temp;
    }
    for (int i = 1; i <= n; ++i) {
      temp = sim(i, nbest);
      sim(i, nbest) = 0.0;
      sim(i, np) += temp;
      tempa = 0.0;
      for (int k = 1; k <= n; ++k) {
        sim(i, k) -= temp;
        tempa -= simi(k, i);
      }
      simi(nbest, i) = tempa;
    }
  }

  error = 0.0;
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      temp = (i == j) ? -1.0 : 0.0;
      for (int k = 1; k <= n; ++k) temp += simi(i, k) * sim(k, j);
      error = std::max(error, std::abs(temp));
    }
  }
  if (error > 0.1) {
    status = CobylaStatus::kRoundingErrors;
    goto finish;
  }

  // Linear models: column k of a is the gradient of constraint k, the last
  // column minus the objective gradient.
  for (int k = 1; k <= mp; ++k) {
    con(k) = -datmat(k, np);
    for (int j = 1; j <= n; ++j) w(j) = datmat(k, j) + con(k);
    for (int i = 1; i <= n; ++i) {
      temp = 0.0;
      for (int j = 1; j <= n; ++j) temp += w(j) * simi(j, i);
      if (k == mp) temp = -temp;
      a(i, k) = temp;
    }
  }

  // Simplex acceptability: vertices neither too close to the opposite face
  // (sigma) nor too far from the best vertex (eta).
  iflag = 1;
  parsig = alpha * rho;
  pareta = beta * rho;
  for (int j = 1; j <= n; ++j) {
    wsig = 0.0;
    weta = 0.0;
    for (int i = 1; i <= n; ++i) {
      wsig += simi(j, i) * simi(j, i);
      weta += sim(i, j) * sim(i, j);
    }
    vsig(j) = 1.0 / std::sqrt(wsig);
    veta(j) = std::sqrt(weta);
    if (vsig(j) < parsig || veta(j) > pareta) iflag = 0;
  }

  if (ibrnch == 1 || iflag == 1) goto trust_region_step;

  // Geometry step: replace the worst vertex.
  jdrop = 0;
  temp = pareta;
  for (int j = 1; j <= n; ++j) {
    if (veta(j) > temp) {
      jdrop = j;
      temp = veta(j);
    }
  }
  if (jdrop == 0) {
    for (int j = 1; j <= n; ++j) {
      if (vsig(j) < temp) {
        jdrop = j;
        temp = vsig(j);
      }
    }
  }

  temp = gamma * rho * vsig(jdrop);
  for (int i = 1; i <= n; ++i) dx(i) = temp * simi(jdrop, i);
  cvmaxp = 0.0;
  cvmaxm = 0.0;
  for (int k = 1; k <= mp; ++k) {
    sum = 0.0;
    for (int i = 1; i <= n; ++i) sum += a(i, k) * dx(i);
    if (k < mp) {
      temp = datmat(k, np);
      cvmaxp = std::max(cvmaxp, -sum - temp);
      cvmaxm = std::max(cvmaxm, sum - temp);
    }
  }
  dxsign = 1.0;
  if (parmu * (cvmaxp - cvmaxm) > sum + sum) dxsign = -1.0;

  temp = 0.0;
  for (int i = 1; i <= n; ++i) {
    dx(i) *= dxsign;
    sim(i, jdrop) = dx(i);
    temp += simi(jdrop, i) * dx(i);
  }
  for (int i = 1; i <= n; ++i) simi(jdrop, i) /= temp;
  for (int j = 1; j <= n; ++j) {
    if (j != jdrop) {
      temp = 0.0;
      for (int i = 1; i <= n; ++i) temp += simi(j, i) * dx(i);
      for (int i = 1; i <= n; ++i) simi(j, i) -= temp * simi(jdrop, i);
    }
    x(j) = sim(j, np) + dx(j);
  }
  goto evaluate;

trust_region_step:
  {
    std::vector<double> b(con_v.begin(), con_v.begin() + mp);
    ifull = trstlp(ws, b, rho, dx_v);
  }
  if (ifull == 0) {
    temp = 0.0;
    for (int i = 1; i <= n; ++i) temp += dx(i) * dx(i);
    if (temp < 0.25 * rho * rho) {
      ibrnch = 1;
      goto reduce_rho;
    }
  }

  // Predicted change of f and of the max violation for x0 + dx.
  resnew = 0.0;
  con(mp) = 0.0;
  for (int k = 1; k <= mp; ++k) {
    sum = con(k);
    for (int i = 1; i <= n; ++i) sum -= a(i, k) * dx(i);
    if (k < mp) resnew = std::max(resnew, sum);
  }

  barmu = 0.0;
  prerec = datmat(mpp, np) - resnew;
  if (prerec > 0.0) barmu = sum / prerec;
  if (parmu < 1.5 * barmu) {
    parmu = 2.0 * barmu;
    phi = datmat(mp, np) + parmu * datmat(mpp, np);
    for (int j = 1; j <= n; ++j) {
      temp = datmat(mp, j) + parmu * datmat(mpp, j);
      if (temp < phi) goto select_best_vertex;
      if (temp == phi && parmu == 0.0 && datmat(mpp, j) < datmat(mpp, np)) goto select_best_vertex;
    }
  }
  prerem = parmu * prerec - sum;

  for (int i = 1; i <= n; ++i) x(i) = sim(i, np) + dx(i);
  ibrnch = 1;
  goto evaluate;

assess_trial:
  vmold = datmat(mp, np) + parmu * datmat(mpp, np);
  vmnew = f + parmu * resmax;
  trured = vmold - vmnew;
  if (parmu == 0.0 && f == datmat(mp, np)) {
    prerem = prerec;
    trured = datmat(mpp, np) - resmax;
  }

  // Pick the vertex the trial point replaces (mandatory if trured > 0).
  ratio = trured <= 0.0 ? 1.0 : 0.0;
  jdrop = 0;
  for (int j = 1; j <= n; ++j) {
    temp = 0.0;
    for (int i = 1; i <= n; ++i) temp += simi(j, i) * dx(i);
    temp = std::abs(temp);
    if (temp > ratio) {
      jdrop = j;
      ratio = temp;
    }
    sigbar(j) = temp * vsig(j);
  }

  edgmax = delta * rho;
  l = 0;
  for (int j = 1; j <= n; ++j) {
    if (sigbar(j) >= parsig || sigbar(j) >= vsig(j)) {
      temp = veta(j);
      if (trured > 0.0) {
        temp = 0.0;
        for (int i = 1; i <= n; ++i) temp += (dx(i) - sim(i, j)) * (dx(i) - sim(i, j));
        temp = std::sqrt(temp);
      }
      if (temp > edgmax) {
        l = j;
        edgmax = temp;
      }
    }
  }
  if (l > 0) jdrop = l;
  if (jdrop == 0) goto reduce_rho;

  temp = 0.0;
  for (int i = 1; i <= n; ++i) {
    sim(i, jdrop) = dx(i);
    temp += simi(jdrop, i) * dx(i);
  }
  for (int i = 1; i <= n; ++i) simi(jdrop, i) /= temp;
  for (int j = 1; j <= n; ++j) {
    if (j != jdrop) {
      temp = 0.0;
      for (int i = 1; i <= n; ++i) temp += simi(j, i) * dx(i);
      for (int i = 1; i <= n; ++i) simi(j, i) -= temp * simi(jdrop, i);
    }
  }
  for (int k = 1; k <= mpp; ++k) datmat(k, jdrop) = con(k);

  if (trured > 0.0 && trured >= 0.1 * prerem) goto select_best_vertex;

reduce_rho:
  if (iflag == 0) {
    ibrnch = 0;
    goto select_best_vertex;
  }
  if (rho > options.rho_end) {
    rho *= 0.5;
    if (rho <= 1.5 * options.rho_end) rho = options.rho_end;
    if (parmu > 0.0) {
      denom = 0.0;
      for (int k = 1; k <= mp; ++k) {
        cmin = datmat(k, np);
        cmax = cmin;
        for (int i = 1; i <= n; ++i) {
          cmin = std::min(cmin, datmat(k, i));
          cmax = std::max(cmax, datmat(k, i));
        }
        if (k <= m && cmin < 0.5 * cmax) {
          temp = std::max(cmax, 0.0) - cmin;
          denom = denom <= 0.0 ? temp : std::min(denom, temp);
        }
      }
      if (denom == 0.0) {
        parmu = 0.0;
      } else if (cmax - cmin < parmu * denom) {
        parmu = (cmax - cmin) / denom;
      }
    }
    goto select_best_vertex;
  }

finish:
  CobylaResult result = tracker.result();
  result.status = status;
  result.final_rho = rho;
  return result;
}

}  // namespace emohead
