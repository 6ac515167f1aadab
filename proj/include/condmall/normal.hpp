#ifndef CONDMALL_NORMAL_HPP
#define CONDMALL_NORMAL_HPP

namespace condmall {

double std_normal_pdf(double x);
double std_normal_cdf(double x);
// 1 - Phi(x), accurate in the right tail.
double std_normal_sf(double x);
// Inverse of Phi on (0, 1): rational approximation plus one Newton step.
double std_normal_quantile(double p);

}  // namespace condmall

#endif  // CONDMALL_NORMAL_HPP
