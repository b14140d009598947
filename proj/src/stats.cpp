#include "scanpath/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>

namespace scanpath {

double ln_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) fail(ErrorCode::DomainError, "ln_gamma needs x > 0");
  return std::lgamma(x);
}

namespace {

// Continued fraction for I_x(a, b), modified Lentz.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double reg_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    fail(ErrorCode::DomainError, "reg_incomplete_beta needs a, b > 0 and x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                                a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) fail(ErrorCode::DomainError, "df must be > 0");
  const double tail = 0.5 * reg_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t >= 0.0 ? 1.0 - tail : tail;
}

double f_sf(double f, double d1, double d2) {
  if (!(d1 > 0.0) || !(d2 > 0.0)) fail(ErrorCode::DomainError, "F degrees of freedom must be > 0");
  if (f <= 0.0) return 1.0;
  return reg_incomplete_beta(0.5 * d2, 0.5 * d1, d2 / (d2 + d1 * f));
}

// ---------------------------------------------------------------------------
// Mann-Whitney U
// ---------------------------------------------------------------------------

namespace {

// Midranks of the pooled sample (a first, then b), doubled so ties stay integral.
std::vector<long> doubled_midranks(std::span<const double> a, std::span<const double> b,
                                   std::vector<long>* tie_sizes) {
  const std::size_t n = a.size() + b.size();
  std::vector<std::pair<double, std::size_t>> v;
  v.reserve(n);
  for (std::size_t i = 0; i < a.size(); ++i) v.emplace_back(a[i], i);
  for (std::size_t i = 0; i < b.size(); ++i) v.emplace_back(b[i], a.size() + i);
  std::sort(v.begin(), v.end());
  std::vector<long> r2(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[j + 1].first == v[i].first) ++j;
    // ranks i+1 .. j+1 -> midrank (i + j + 2) / 2, doubled
    const long mid2 = static_cast<long>(i + j + 2);
    for (std::size_t k = i; k <= j; ++k) r2[v[k].second] = mid2;
    if (tie_sizes) tie_sizes->push_back(static_cast<long>(j - i + 1));
    i = j + 1;
  }
  return r2;
}

}  // namespace

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::EmptySample, "both samples need at least one value");
  for (double v : a) {
    if (std::isnan(v)) fail(ErrorCode::DomainError, "NaN in sample");
  }
  for (double v : b) {
    if (std::isnan(v)) fail(ErrorCode::DomainError, "NaN in sample");
  }
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;
  std::vector<long> ties;
  const auto r2 = doubled_midranks(a, b, &ties);
  long ra2 = 0;
  for (std::size_t i = 0; i < n1; ++i) ra2 += r2[i];
  const double u = 0.5 * static_cast<double>(ra2) - 0.5 * static_cast<double>(n1 * (n1 + 1));
  const double mu = 0.5 * static_cast<double>(n1 * n2);

  TestResult res;
  res.statistic = u;
  res.n1 = n1;
  res.n2 = n2;
  if (n1 * n2 <= 64) {
    // Distribution of the doubled rank sum over all C(n, n1) subsets.
    const long max_sum = std::accumulate(r2.begin(), r2.end(), 0L);
    std::vector<std::vector<double>> ways(n1 + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const long r = r2[i];
      for (std::size_t j = std::min(i + 1, n1); j >= 1; --j) {
        auto& dst = ways[j];
        const auto& src = ways[j - 1];
        for (long s = max_sum; s >= r; --s) dst[static_cast<std::size_t>(s)] += src[static_cast<std::size_t>(s - r)];
      }
    }
    const double obs = std::abs(u - mu);
    double extreme = 0.0, total = 0.0;
    for (long s = 0; s <= max_sum; ++s) {
      const double w = ways[n1][static_cast<std::size_t>(s)];
      if (w == 0.0) continue;
      total += w;
      const double us = 0.5 * static_cast<double>(s) - 0.5 * static_cast<double>(n1 * (n1 + 1));
      if (std::abs(us - mu) >= obs - 1e-9) extreme += w;
    }
    res.p_value = std::min(1.0, extreme / total);
    res.method = "mann-whitney-exact";
  } else {
    double tie_term = 0.0;
    for (long t : ties) tie_term += static_cast<double>(t * t * t - t);
    const double nn = static_cast<double>(n);
    const double var = static_cast<double>(n1 * n2) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var <= 0.0) {
      res.p_value = 1.0;
    } else {
      const double z = std::max(std::abs(u - mu) - 0.5, 0.0) / std::sqrt(var);
      res.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
    res.method = "mann-whitney-normal";
  }
  res.p_adjusted = res.p_value;
  return res;
}

// ---------------------------------------------------------------------------
// t and Hotelling
// ---------------------------------------------------------------------------

TestResult t_test_ind(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) fail(ErrorCode::EmptySample, "t-test needs at least 2 values per group");
  auto mean = [](std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  auto ss = [](std::span<const double> v, double m) {
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
  };
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double df = n1 + n2 - 2.0;
  const double sp2 = (ss(a, ma) + ss(b, mb)) / df;
  if (!(sp2 > 0.0)) fail(ErrorCode::ZeroVariance, "pooled variance is zero");
  const double t = (ma - mb) / std::sqrt(sp2 * (1.0 / n1 + 1.0 / n2));
  TestResult r;
  r.statistic = t;
  r.n1 = a.size();
  r.n2 = b.size();
  r.df1 = df;
  r.p_value = std::clamp(reg_incomplete_beta(0.5 * df, 0.5, df / (df + t * t)), 0.0, 1.0);
  r.p_adjusted = r.p_value;
  r.method = "student-t";
  return r;
}

TestResult hotelling_t2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const auto n1 = static_cast<double>(a.rows()), n2 = static_cast<double>(b.rows());
  const auto p = a.cols();
  if (a.rows() < 1 || b.rows() < 1) fail(ErrorCode::EmptySample, "both groups need observations");
  if (b.cols() != p || p < 1) fail(ErrorCode::ShapeMismatch, "groups must share a positive dimension");
  if (!(n1 + n2 > static_cast<double>(p) + 1.0)) {
    fail(ErrorCode::SingularCovariance, "need n1 + n2 > p + 1 observations");
  }
  const Eigen::RowVectorXd ma = a.colwise().mean(), mb = b.colwise().mean();
  const Eigen::MatrixXd ca = a.rowwise() - ma, cb = b.rowwise() - mb;
  const Eigen::MatrixXd s = (ca.transpose() * ca + cb.transpose() * cb) / (n1 + n2 - 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  const Eigen::VectorXd ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 0.0) || ev.maxCoeff() / ev.minCoeff() >= 1e12) {
    fail(ErrorCode::SingularCovariance, "pooled covariance is singular or ill-conditioned");
  }
  const Eigen::VectorXd d = (ma - mb).transpose();
  const Eigen::VectorXd y = eig.eigenvectors().transpose() * d;
  const double quad = (y.array().square() / ev.array()).sum();
  const double t2 = n1 * n2 / (n1 + n2) * quad;
  const double pd = static_cast<double>(p);
  const double df2 = n1 + n2 - pd - 1.0;
  const double f = df2 / (pd * (n1 + n2 - 2.0)) * t2;
  TestResult r;
  r.statistic = t2;
  r.n1 = static_cast<std::size_t>(a.rows());
  r.n2 = static_cast<std::size_t>(b.rows());
  r.df1 = pd;
  r.df2 = df2;
  r.p_value = std::clamp(f_sf(f, pd, df2), 0.0, 1.0);
  r.p_adjusted = r.p_value;
  r.method = "hotelling-t2";
  return r;
}

void bonferroni(std::vector<TestResult>& results, std::size_t m) {
  const double k = static_cast<double>(m ? m : results.size());
  for (auto& r : results) r.p_adjusted = std::min(1.0, r.p_value * k);
}

PairwiseMatrix hotelling_pairwise(const std::vector<Eigen::MatrixXd>& groups,
                                  std::vector<std::string> names) {
  const std::size_t k = groups.size();
  if (names.size() != k) fail(ErrorCode::LengthMismatch, "one name per group");
  PairwiseMatrix out;
  out.names = std::move(names);
  out.cells.assign(k, std::vector<TestResult>(k));
  const double m = static_cast<double>(k * (k - 1) / 2);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  }
#pragma omp parallel for schedule(dynamic)
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const auto [i, j] = pairs[q];
    TestResult r;
    try {
      r = hotelling_t2(groups[i], groups[j]);
      r.p_adjusted = std::min(1.0, r.p_value * m);
    } catch (const Error& e) {
      r.n1 = static_cast<std::size_t>(groups[i].rows());
      r.n2 = static_cast<std::size_t>(groups[j].rows());
      r.p_value = r.p_adjusted = std::numeric_limits<double>::quiet_NaN();
      r.method = std::string("untestable: ") + e.what();
    }
    out.cells[i][j] = r;
  }
  return out;
}

std::string format_pairwise_matrix(const PairwiseMatrix& m, char delimiter) {
  std::string out;
  for (const auto& n : m.names) {
    out += delimiter;
    out += n;
  }
  out += '\n';
  char buf[64];
  for (std::size_t i = 0; i < m.names.size(); ++i) {
    out += m.names[i];
    for (std::size_t j = 0; j < m.names.size(); ++j) {
      out += delimiter;
      if (j > i) {
        const double p = m.cells[i][j].p_adjusted;
        if (std::isnan(p)) {
          out += "NA";
        } else {
          const int n = std::snprintf(buf, sizeof buf, "%.4g", p);
          out.append(buf, static_cast<std::size_t>(n));
        }
      }
    }
    out += '\n';
  }
  return out;
}

double cohens_kappa(std::span<const std::string> r1, std::span<const std::string> r2) {
  if (r1.size() != r2.size()) fail(ErrorCode::LengthMismatch, "raters labeled different numbers of items");
  if (r1.empty()) fail(ErrorCode::EmptySample, "no items to compare");
  std::map<std::string, std::pair<double, double>> marg;
  double agree = 0.0;
  for (std::size_t i = 0; i < r1.size(); ++i) {
    marg[r1[i]].first += 1.0;
    marg[r2[i]].second += 1.0;
    if (r1[i] == r2[i]) agree += 1.0;
  }
  const double n = static_cast<double>(r1.size());
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [k, v] : marg) pe += (v.first / n) * (v.second / n);
  if (pe >= 1.0) {
    if (po == 1.0) return 1.0;
    fail(ErrorCode::DegenerateMarginals, "chance agreement is 1");
  }
  if (po == 1.0) return 1.0;
  return (po - pe) / (1.0 - pe);
}

double cohens_kappa(std::span<const BehaviorLabel> r1, std::span<const BehaviorLabel> r2) {
  std::vector<std::string> a, b;
  for (auto l : r1) a.emplace_back(to_string(l));
  for (auto l : r2) b.emplace_back(to_string(l));
  return cohens_kappa(a, b);
}

std::string format_test_table(std::span<const TestResult> results,
                              std::span<const std::string> names, char delimiter) {
  std::string out;
  const char d = delimiter;
  out += std::string("name") + d + "method" + d + "n1" + d + "n2" + d + "statistic" + d + "p" + d +
         "p_adjusted\n";
  char buf[256];
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const int n = std::snprintf(buf, sizeof buf, "%s%c%s%c%zu%c%zu%c%.6g%c%.6g%c%.6g\n",
                                i < names.size() ? names[i].c_str() : "", d, r.method.c_str(), d,
                                r.n1, d, r.n2, d, r.statistic, d, r.p_value, d, r.p_adjusted);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

}  // namespace scanpath
