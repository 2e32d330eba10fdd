#pragma once

#include <utility>

namespace threespheres {

/// g1(x) = (x^(p-1)+1)(x-1) / ((x^(p-1)-1)(x+1)), x > 1.
double g1(double x, double p);
/// g2(x) = (x^(p-1)-1) / ((x-1)(x^(p-2)+1)), x > 1.
double g2(double x, double p);
/// g3(x) = (x^(p-1)-1)(x^(2-p)+1) / (x-1), x > 1.
double g3(double x, double p);

/// (a^(p-1)-b^(p-1))/(a-b), continuous through a = b.
double difference_quotient(double a, double b, double p);
/// (a^(p-1)+b^(p-1))/(a+b).
double sum_quotient(double a, double b, double p);

/// Tight constants of the difference-quotient inequalities and the composed
/// envelope constants for I(p).
///
///   C1 DQ <= SQ <= C2 DQ                       DQ = (a^(p-1)-b^(p-1))/(a-b)
///   C3 W  <= DQ <= C4 W                        SQ = (a^(p-1)+b^(p-1))/(a+b)
///
/// with W = a^(p-2)+b^(p-2) for p >= 2 and W = 1/(a^(2-p)+b^(2-p)) for p < 2.
/// I(p) lies between SQ/(p-1) and DQ/(p-1) (in that order for p >= 2, the
/// reverse for p < 2), hence
///
///   p >= 2:  C7 = C1 C3 / (p-1),  C8 = C4 / (p-1)
///   p <  2:  C7 = C3 / (p-1),     C8 = C2 C4 / (p-1)
///
/// and C9 = min(C7, 1/C8), C10 = max(1/C7, C8).
struct TightConstants {
  double p = 2.0;
  bool high_branch = true;  // p >= 2: C3, C4 bound g2; otherwise g3
  double c1 = 1.0;
  double c2 = 1.0;
  double c3 = 1.0;
  double c4 = 1.0;
  double c5 = 1.0;
  double c6 = 2.0;
  double c7 = 1.0;
  double c8 = 1.0;
  double c9 = 1.0;
  double c10 = 1.0;
};

TightConstants tight_constants(double p);

/// Margins of both inequalities at one sample, as relative gaps between the
/// g-function and the constant it is compared with. Non-negative margins mean
/// the inequality holds.
struct SampleVerdict {
  double g1 = 0.0;
  double g_second = 0.0;  // g2 for p >= 2, g3 otherwise
  double lower9 = 0.0;    // g1 / C1 - 1
  double upper9 = 0.0;    // 1 - g1 / C2
  double lower10 = 0.0;   // g / C3 - 1
  double upper10 = 0.0;   // 1 - g / C4
  bool high_branch = true;

  double worst() const;
};

/// Symmetric in (a, b); requires a, b > 0, a != b, p > 1.
SampleVerdict verify_sample(double a, double b, double p);

/// Envelope weight a^(p-2)+b^(p-2) (p >= 2) or 1/(a^(2-p)+b^(2-p)) (p < 2).
double envelope_weight(double a, double b, double p);

/// [C9 W, C10 W] for gradient magnitudes gv, gu.
std::pair<double, double> I_p_bounds(double gv, double gu, double p);

/// I(p) = integral_0^1 |lambda a + (1-lambda) b|^(p-2) dlambda for collinear
/// gradients of magnitudes a, b, same or opposite orientation, from the
/// antiderivative.
double I_p_collinear_closed_form(double a, double b, bool opposite, double p);

}  // namespace threespheres
