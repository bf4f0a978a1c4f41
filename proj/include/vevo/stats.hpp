#pragma once

namespace vevo::stats {

double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double regularized_incomplete_beta(double x, double a, double b);

double student_t_cdf(double x, double dof);

/// Two-sided p-value for a t statistic.
double student_t_pvalue(double t, double dof);

double f_cdf(double x, double d1, double d2);

/// Upper-tail p-value for an F statistic.
double f_pvalue(double f, double d1, double d2);

double normal_cdf(double x);

}  // namespace vevo::stats
