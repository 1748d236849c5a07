#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "varreg/setvalued.hpp"

namespace varreg {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// f(z) = A z + c
struct AffineFn {
  Mat A;
  Vec c;
};
// scalar piecewise-smooth f (n = m = 1 models)
struct Sep1DFn {
  PiecewiseFn fn;
};

struct Assumptions {
  bool injective_B = false;   // rank B = m
  bool smooth_f = false;      // f continuously differentiable where sampled
  bool closed_graph = false;  // every component graph closed
  bool surjective_C = false;  // rank C = m
  bool product_F = true;      // by construction
  double rank_tol = 0.0;
};

// Generalized equation p in f(z) + B F(C z) with F a coordinate product.
class GenEq {
 public:
  std::string name;
  int n = 1, m = 1;
  std::variant<AffineFn, Sep1DFn> f{AffineFn{Mat::Zero(1, 1), Vec::Zero(1)}};
  Mat B, C;
  SVProd F;
  std::map<std::string, double> params;
  std::string notes;

  // Validates shapes, audits continuity of f, computes assumption flags.
  static GenEq make(std::string name, std::variant<AffineFn, Sep1DFn> f, Mat B, Mat C, SVProd F,
                    std::map<std::string, double> params = {}, std::string notes = {});

  const Assumptions& assumptions() const { return asm_; }

  Vec f_eval(const Vec& z) const;
  // Jacobian of f at z; Sep1D models throw KinkError at a kink.
  Mat jac_f(const Vec& z) const;
  bool f_is_affine() const { return std::holds_alternative<AffineFn>(f); }

  // Least-squares value multiplier (B^T B)^{-1} B^T (p - f(z)); requires
  // injective B.
  Vec pseudo_v(const Vec& p, const Vec& z) const;

  // d(p - f(z), B F(Cz)); +inf when F(Cz) is empty.
  double residual(const Vec& p, const Vec& z) const;

 private:
  Assumptions asm_;
  void audit();
};

struct RefPoint {
  Vec p, z, v;
};

// Builds and audits a reference point: v is computed from p, z for injective
// B (an explicit v, when given, must agree within 1e-8); non-injective B
// requires an explicit v.  Membership v in F(Cz) is enforced within 1e-8.
RefPoint make_refpoint(const GenEq& ge, Vec p, Vec z, std::optional<Vec> v_explicit = {});

// Named circuit models with parameter overrides.  Known names: regulator,
// diac, scr_zener, sampling_gate, led_pair, scr_alone.
std::pair<GenEq, std::vector<RefPoint>> example(
    const std::string& name, const std::map<std::string, double>& overrides = {});

// Assembles the affine mesh model p in Az + B F(Cz) from loop matrices and
// diode incidence; source terms enter through p at solve time.
GenEq from_mesh(std::string name, Mat A, Mat B, Mat C, SVProd F,
                std::map<std::string, double> params = {});

double matrix_rank_tolerant(const Mat& M, double rel_tol = 1e-10);

}  // namespace varreg
