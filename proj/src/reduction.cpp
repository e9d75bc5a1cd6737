#include "nucleifuse/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <Eigen/Dense>

#include "binary_io.hpp"
#include "nucleifuse/error.hpp"

namespace nucleifuse::reduction {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr char kMagic[8] = {'P', 'C', 'A', 'M', 'D', 'L', '1', '\0'};

// Modified Gram-Schmidt over the rows; rows that collapse are replaced by
// the first standard basis vector independent of the earlier rows.
void orthonormalise(RowMatrix& rows) {
  {
    const Eigen::MatrixXd gram = rows * rows.transpose();
    const double dev = (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (dev < 1e-11) return;
  }
  const Eigen::Index k = rows.rows();
  const Eigen::Index d = rows.cols();
  Eigen::Index next_basis = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < i; ++j) rows.row(i) -= rows.row(j).dot(rows.row(i)) * rows.row(j);
    }
    double norm = rows.row(i).norm();
    while (norm < 1e-10 && next_basis < d) {
      rows.row(i).setZero();
      rows(i, next_basis++) = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (Eigen::Index j = 0; j < i; ++j) rows.row(i) -= rows.row(j).dot(rows.row(i)) * rows.row(j);
      }
      norm = rows.row(i).norm();
    }
    rows.row(i) /= norm;
  }
}

void fix_sign(RowMatrix& rows) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    Eigen::Index arg = 0;
    for (Eigen::Index j = 1; j < rows.cols(); ++j) {
      if (std::abs(rows(i, j)) > std::abs(rows(i, arg))) arg = j;
    }
    if (rows(i, arg) < 0.0) rows.row(i) *= -1.0;
  }
}

}  // namespace

std::size_t policy_components(FeatureKind kind, std::size_t input_dim) {
  const std::size_t cap = kind == FeatureKind::Handcrafted ? 100 : 1000;
  return std::min(cap, input_dim);
}

PcaModel pca_fit(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2 || k == 0 || k > std::min(n - 1, d)) {
    throw InputError("PCA: k = " + std::to_string(k) + " must satisfy 1 <= k <= min(n - 1, d) = " +
                     std::to_string(n < 1 ? 0 : std::min(n - 1, d)));
  }
  require_finite(x, "PCA input");

  Eigen::Map<const RowMatrix> data(x.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = data.colwise().mean();
  const RowMatrix centered = data.rowwise() - mean;
  const double denom = static_cast<double>(n - 1);
  const auto ki = static_cast<Eigen::Index>(k);

  RowMatrix components(ki, static_cast<Eigen::Index>(d));
  Eigen::VectorXd variances(ki);

  if (n < d) {
    // Gram route: eigenvectors u of Xc Xc^T map to v = Xc^T u / sqrt(lambda (n-1)).
    const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw NumericError("PCA: eigen-decomposition failed");
    const Eigen::Index m = gram.rows();
    const double top = std::max(solver.eigenvalues()(m - 1), 0.0);
    // Top-k eigenvectors, strongest first, as rows.
    RowMatrix basis(ki, m);
    for (Eigen::Index i = 0; i < ki; ++i) {
      const double lambda = std::max(solver.eigenvalues()(m - 1 - i), 0.0);
      const bool kept = lambda > 1e-12 * top && lambda > 0.0;
      variances(i) = kept ? lambda : 0.0;
      if (kept) {
        basis.row(i) = solver.eigenvectors().col(m - 1 - i).transpose() / std::sqrt(lambda * denom);
      } else {
        basis.row(i).setZero();
      }
    }
    components.noalias() = basis * centered;
  } else {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw NumericError("PCA: eigen-decomposition failed");
    const Eigen::Index m = cov.rows();
    for (Eigen::Index i = 0; i < ki; ++i) {
      variances(i) = std::max(solver.eigenvalues()(m - 1 - i), 0.0);
      components.row(i) = solver.eigenvectors().col(m - 1 - i).transpose();
    }
  }

  orthonormalise(components);
  fix_sign(components);

  PcaModel model;
  model.mean.assign(mean.data(), mean.data() + d);
  model.components = Matrix(k, d, std::vector<double>(components.data(), components.data() + components.size()));
  model.explained_variance.assign(variances.data(), variances.data() + k);
  for (std::size_t i = 1; i < k; ++i) {
    model.explained_variance[i] = std::min(model.explained_variance[i], model.explained_variance[i - 1]);
  }
  return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  if (x.cols() != model.input_dim()) {
    throw InputError("PCA transform: input has " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(model.input_dim()));
  }
  const auto n = static_cast<Eigen::Index>(x.rows());
  const auto d = static_cast<Eigen::Index>(model.input_dim());
  const auto k = static_cast<Eigen::Index>(model.output_dim());
  Eigen::Map<const RowMatrix> data(x.data().data(), n, d);
  Eigen::Map<const RowMatrix> comps(model.components.data().data(), k, d);
  Eigen::Map<const Eigen::RowVectorXd> mean(model.mean.data(), d);
  Matrix out(x.rows(), model.output_dim());
  Eigen::Map<RowMatrix> result(out.data().data(), n, k);
  result.noalias() = (data.rowwise() - mean) * comps.transpose();
  return out;
}

Matrix pca_reconstruct(const PcaModel& model, const Matrix& projected) {
  if (projected.cols() != model.output_dim()) throw InputError("PCA reconstruct: width mismatch");
  const auto n = static_cast<Eigen::Index>(projected.rows());
  const auto d = static_cast<Eigen::Index>(model.input_dim());
  const auto k = static_cast<Eigen::Index>(model.output_dim());
  Eigen::Map<const RowMatrix> proj(projected.data().data(), n, k);
  Eigen::Map<const RowMatrix> comps(model.components.data().data(), k, d);
  Eigen::Map<const Eigen::RowVectorXd> mean(model.mean.data(), d);
  Matrix out(projected.rows(), model.input_dim());
  Eigen::Map<RowMatrix> result(out.data().data(), n, d);
  result.noalias() = proj * comps;
  result.rowwise() += mean;
  return out;
}

void write_pca(const PcaModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  detail::write_le<std::uint64_t>(out, model.input_dim());
  detail::write_le<std::uint64_t>(out, model.output_dim());
  for (double v : model.mean) detail::write_le(out, v);
  for (double v : model.components.data()) detail::write_le(out, v);
  for (double v : model.explained_variance) detail::write_le(out, v);
}

PcaModel read_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("PCA model not found: " + path.string());
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) throw FormatError("bad PCA model magic", 0);
  const auto d = detail::read_le<std::uint64_t>(in, "PCA model");
  const auto k = detail::read_le<std::uint64_t>(in, "PCA model");
  if (k > d) throw FormatError("PCA model has more components than inputs", 16);
  PcaModel model;
  model.mean.resize(d);
  for (auto& v : model.mean) v = detail::read_le<double>(in, "PCA model");
  model.components = Matrix(k, d);
  for (auto& v : model.components.data()) v = detail::read_le<double>(in, "PCA model");
  model.explained_variance.resize(k);
  for (auto& v : model.explained_variance) v = detail::read_le<double>(in, "PCA model");
  return model;
}

}  // namespace nucleifuse::reduction
