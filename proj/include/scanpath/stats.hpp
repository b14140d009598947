#pragma once

// Mann-Whitney U, Student t, Hotelling T^2, Cohen's kappa, and the special
// functions behind their p-values.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scanpath/core.hpp"

namespace scanpath {

/// Throws DomainError for x <= 0.
double ln_gamma(double x);
/// I_x(a, b). Throws DomainError unless a, b > 0 and 0 <= x <= 1.
double reg_incomplete_beta(double a, double b, double x);
double normal_cdf(double z);
/// Student t CDF with `df` degrees of freedom.
double student_t_cdf(double t, double df);
/// Upper tail P(F > f) of the F(d1, d2) distribution.
double f_sf(double f, double d1, double d2);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double p_adjusted = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::string method;
  double df1 = 0.0;  // t: df; Hotelling: F numerator df
  double df2 = 0.0;  // Hotelling: F denominator df
};

/// statistic = U for `a`. Exact two-sided p by enumerating group
/// assignments of the pooled midranks when n1 * n2 <= 64; otherwise the
/// normal approximation with tie and continuity corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

/// Pooled-variance two-sample t; statistic = t, df1 = n1 + n2 - 2.
TestResult t_test_ind(std::span<const double> a, std::span<const double> b);

/// Rows are observations. Throws SingularCovariance when the pooled
/// covariance has condition number >= 1e12 or too few observations.
TestResult hotelling_t2(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// p_adjusted = min(1, p * m) with m = results.size() unless given.
void bonferroni(std::vector<TestResult>& results, std::size_t m = 0);

/// Upper-triangle pairwise results; entry (i, j) for i < j.
struct PairwiseMatrix {
  std::vector<std::string> names;
  std::vector<std::vector<TestResult>> cells;

  const TestResult& at(std::size_t i, std::size_t j) const { return cells[i][j]; }
};

/// Pairwise Hotelling with Bonferroni over C(k, 2) comparisons. A pair that
/// cannot be tested (too few rows, singular covariance) gets NaN p-values
/// and the reason in `method`.
PairwiseMatrix hotelling_pairwise(const std::vector<Eigen::MatrixXd>& groups,
                                  std::vector<std::string> names);

/// Adjusted p-values, names on both axes, lower triangle left blank, NA for
/// untestable pairs.
std::string format_pairwise_matrix(const PairwiseMatrix& m, char delimiter = '\t');

/// Throws LengthMismatch (or EmptySample) and DegenerateMarginals.
double cohens_kappa(std::span<const std::string> r1, std::span<const std::string> r2);
double cohens_kappa(std::span<const BehaviorLabel> r1, std::span<const BehaviorLabel> r2);

/// One row per test: name, method, n1, n2, statistic, p, p_adjusted.
std::string format_test_table(std::span<const TestResult> results,
                              std::span<const std::string> names, char delimiter = '\t');

}  // namespace scanpath
