#include "flangecal/rigid_fit.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "flangecal/errors.hpp"

namespace flangecal {

namespace {
constexpr double kCoplanarTol = 1e-9;
}

FitResult fit_points(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst,
                     bool with_scale, std::size_t min_points, bool check_coplanar) {
  const std::size_t n = src.size();
  if (n != dst.size()) throw InvalidArgument("point lists differ in length");
  if (n < min_points) throw DegenerateConfiguration("too few point pairs");

  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero(), mu_d = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  mu_s *= inv_n;
  mu_d *= inv_n;

  if (check_coplanar) {
    Eigen::MatrixXd centered(n, 3);
    for (std::size_t i = 0; i < n; ++i) centered.row(static_cast<Eigen::Index>(i)) = (dst[i] - mu_d).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> sv(centered);
    if (!(sv.singularValues()(2) > kCoplanarTol)) throw DegenerateConfiguration("points are coplanar");
  }

  Eigen::Matrix3d sigma = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sigma += (dst[i] - mu_d) * (src[i] - mu_s).transpose();
    var_s += (src[i] - mu_s).squaredNorm();
  }
  sigma *= inv_n;
  var_s *= inv_n;

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(sigma, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Vector3d s(1, 1, 1);
  if (u.determinant() * v.determinant() < 0) s(2) = -1;
  const Eigen::Matrix3d r = u * s.asDiagonal() * v.transpose();

  FitResult out;
  out.scale = 1.0;
  if (with_scale) {
    if (!(var_s > 0)) throw DegenerateConfiguration("source points have zero spread");
    out.scale = svd.singularValues().dot(s) / var_s;
  }
  out.transform = RigidTransform(r, mu_d - out.scale * r * mu_s);

  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (out.scale * (r * src[i]) + out.transform.translation() - dst[i]).squaredNorm();
  out.residual_rms = std::sqrt(ss * inv_n);
  return out;
}

FitResult fit_rigid(const std::vector<SamplePair>& pairs, bool with_scale) {
  std::vector<Eigen::Vector3d> cam, base;
  cam.reserve(pairs.size());
  base.reserve(pairs.size());
  for (const auto& p : pairs) {
    cam.push_back(p.p_cam);
    base.push_back(p.p_base);
  }
  return fit_points(cam, base, with_scale, 4, true);
}

double residual_rms(const std::vector<SamplePair>& pairs, const FitResult& fit) {
  if (pairs.empty()) return 0.0;
  double ss = 0.0;
  for (const auto& p : pairs) {
    const Eigen::Vector3d pred = fit.scale * (fit.transform.rotation() * p.p_cam) + fit.transform.translation();
    ss += (pred - p.p_base).squaredNorm();
  }
  return std::sqrt(ss / static_cast<double>(pairs.size()));
}

}  // namespace flangecal
