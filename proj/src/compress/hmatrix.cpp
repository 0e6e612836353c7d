#include "greenpc/compress/hmatrix.hpp"

#include "greenpc/error.hpp"
#include "greenpc/random.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace greenpc::compress {

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Positions (into `idx`) of the s points nearest to `target`, taken from the
// nearer half of the cluster and thinned evenly along the tree order.
std::vector<Index> nearest_pivots(const Eigen::MatrixXd& pts, const IndexList& idx, const Eigen::VectorXd& target,
                                  Index s) {
  const Index n = static_cast<Index>(idx.size());
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return (pts.col(idx[static_cast<std::size_t>(a)]) - target).squaredNorm() <
           (pts.col(idx[static_cast<std::size_t>(b)]) - target).squaredNorm();
  });
  const Index m = std::min(n, std::max(s, (n + 1) / 2));
  order.resize(static_cast<std::size_t>(m));
  std::sort(order.begin(), order.end());
  std::vector<Index> out;
  for (Index t = 0; t < s; ++t) out.push_back(order[static_cast<std::size_t>((2 * t + 1) * m / (2 * s))]);
  return out;
}

std::vector<Index> random_pivots(Index n, Index s, Rng& rng) {
  std::vector<Index> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), Index{0});
  for (Index i = 0; i < s; ++i) {
    const auto j = i + static_cast<Index>(rng.index(static_cast<std::uint64_t>(n - i)));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  p.resize(static_cast<std::size_t>(s));
  std::sort(p.begin(), p.end());
  return p;
}

IndexList pick(const IndexList& idx, const std::vector<Index>& pos) {
  IndexList out;
  for (Index p : pos) out.push_back(idx[static_cast<std::size_t>(p)]);
  return out;
}

Eigen::MatrixXd thin_q(const Eigen::MatrixXd& A, Eigen::MatrixXd& R) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
  const Index k = std::min(A.rows(), A.cols());
  R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return qr.householderQ() * Eigen::MatrixXd::Identity(A.rows(), k);
}

std::optional<LowRank> cross(const KernelSource& kernel, const IndexList& rows, const IndexList& cols,
                             const std::vector<Index>& prow, const std::vector<Index>& pcol, int k, double tol) {
  const Eigen::MatrixXd C = kernel.block(rows, pick(cols, pcol));
  const Eigen::MatrixXd R = kernel.block(pick(rows, prow), cols);
  Eigen::MatrixXd W(prow.size(), pcol.size());
  for (std::size_t i = 0; i < prow.size(); ++i) W.row(static_cast<Index>(i)) = C.row(prow[i]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0) || !std::isfinite(sv(0))) return std::nullopt;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Index i = 0; i < sv.size(); ++i)
    if (sv(i) > 1e-10 * sv(0)) inv(i) = 1.0 / sv(i);
  const Eigen::MatrixXd Wp = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();

  // C W^+ R = U0 V0^T, recompressed through two thin QRs and a small SVD.
  Eigen::MatrixXd R1, R2;
  const Eigen::MatrixXd Q1 = thin_q(C, R1);
  const Eigen::MatrixXd Q2 = thin_q((Wp * R).transpose(), R2);
  Eigen::JacobiSVD<Eigen::MatrixXd> core(R1 * R2.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& cs = core.singularValues();
  Index r = std::min<Index>(k, cs.size());
  while (r > 0 && !(cs(r - 1) > 0.0 && cs(r - 1) > tol * cs(0))) --r;
  LowRank lr;
  lr.U = Q1 * core.matrixU().leftCols(r) * cs.head(r).asDiagonal();
  lr.V = Q2 * core.matrixV().leftCols(r);
  return lr;
}

}  // namespace

std::optional<LowRank> lowrank_block(const KernelSource& kernel, const ClusterTree& tree, int row_node, int col_node,
                                     int sample_rank, int k, Pivots pivots, std::uint64_t seed, double truncation_tol) {
  if (k < 1 || sample_rank < 1) throw ConfigError("rank must be positive");
  const ClusterNode& a = tree.node(row_node);
  const ClusterNode& b = tree.node(col_node);
  const IndexList rows = tree.original_indices(row_node), cols = tree.original_indices(col_node);
  const Index s = std::min<Index>({sample_rank, a.size(), b.size()});
  Rng rng(mix(seed));
  std::vector<Index> pr, pc;
  if (pivots == Pivots::nearest) {
    pr = nearest_pivots(kernel.points(), rows, b.center(), s);
    pc = nearest_pivots(kernel.points(), cols, a.center(), s);
  } else {
    pr = random_pivots(a.size(), s, rng);
    pc = random_pivots(b.size(), s, rng);
  }
  if (auto lr = cross(kernel, rows, cols, pr, pc, k, truncation_tol)) return lr;
  pr = random_pivots(a.size(), s, rng);
  pc = random_pivots(b.size(), s, rng);
  return cross(kernel, rows, cols, pr, pc, k, truncation_tol);
}

int log_scaled_rank(int base, Index n_block, Index n_leaf) {
  const double f = (n_leaf > 1 && n_block > 1) ? std::log(static_cast<double>(n_block)) / std::log(static_cast<double>(n_leaf)) : 1.0;
  return static_cast<int>(std::lround(base * std::max(1.0, f)));
}

std::size_t HBlock::stored_scalars() const {
  if (low_rank) return static_cast<std::size_t>(factors.U.size() + factors.V.size());
  return static_cast<std::size_t>(dense.size());
}

std::size_t HMatrix::stored_scalars() const {
  std::size_t n = 0;
  for (const auto& b : blocks_) n += b.stored_scalars();
  return n;
}

double HMatrix::entry(Index i, Index j) const {
  const Index r = tree_.inverse_perm()[static_cast<std::size_t>(i)];
  const Index c = tree_.inverse_perm()[static_cast<std::size_t>(j)];
  for (const auto& b : blocks_) {
    if (r < b.row_begin || r >= b.row_end || c < b.col_begin || c >= b.col_end) continue;
    if (!b.low_rank) return b.dense(r - b.row_begin, c - b.col_begin);
    return b.factors.U.row(r - b.row_begin).dot(b.factors.V.row(c - b.col_begin));
  }
  throw std::logic_error("entry not covered by any block");
}

Eigen::MatrixXd HMatrix::to_dense() const {
  const Index n = size();
  Eigen::MatrixXd P(n, n);
  for (const auto& b : blocks_) {
    const Eigen::MatrixXd v = b.low_rank ? Eigen::MatrixXd(b.factors.U * b.factors.V.transpose()) : b.dense;
    for (Index c = 0; c < b.cols(); ++c)
      for (Index r = 0; r < b.rows(); ++r)
        P(tree_.perm()[static_cast<std::size_t>(b.row_begin + r)], tree_.perm()[static_cast<std::size_t>(b.col_begin + c)]) =
            v(r, c);
  }
  return P;
}

nlohmann::json HMatrix::stats() const {
  std::size_t dense = 0, low = 0, admissible_dense = 0;
  std::map<Index, std::size_t> ranks;
  for (const auto& b : blocks_) {
    if (b.low_rank) {
      ++low;
      ++ranks[b.factors.rank()];
    } else {
      ++dense;
      if (admissible(tree_.node(b.row_node), tree_.node(b.col_node), options_.eta, options_.distance)) ++admissible_dense;
    }
  }
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [r, c] : ranks) hist[std::to_string(r)] = c;
  const char* rule = options_.rank.kind == RankRule::Kind::fixed        ? "fixed"
                     : options_.rank.kind == RankRule::Kind::log_scaled ? "log_scaled"
                                                                        : "adaptive";
  return {{"n", size()},
          {"blocks", {{"dense", dense}, {"low_rank", low}, {"dense_fallback", admissible_dense}}},
          {"rank_histogram", hist},
          {"memory_bytes", memory_bytes()},
          {"dense_bytes", dense_bytes()},
          {"compression_ratio", compression_ratio()},
          {"eta", options_.eta},
          {"distance", options_.distance == Distance::box ? "box" : "center"},
          {"leaf_max", options_.leaf_max},
          {"rank_rule", rule},
          {"tree_depth", tree_.depth()}};
}

namespace {

struct Builder {
  const KernelSource& kernel;
  const ClusterTree& tree;
  const HOptions& opt;
  HMatrix& H;
  std::size_t scalars = 0;

  void dense(int a, int b) {
    HBlock blk = frame(a, b);
    blk.dense = kernel.block(tree.original_indices(a), tree.original_indices(b));
    push(std::move(blk));
  }

  HBlock frame(int a, int b) const {
    HBlock blk;
    blk.row_node = a;
    blk.col_node = b;
    blk.row_begin = tree.node(a).begin;
    blk.row_end = tree.node(a).end;
    blk.col_begin = tree.node(b).begin;
    blk.col_end = tree.node(b).end;
    return blk;
  }

  void push(HBlock blk) {
    scalars += blk.stored_scalars();
    H.blocks().push_back(std::move(blk));
    if (8.0 * static_cast<double>(scalars) > opt.memory_budget) {
      std::ostringstream os;
      os << "H-matrix exceeds the memory budget of " << opt.memory_budget << " bytes after " << H.blocks().size()
         << " blocks (" << 8.0 * static_cast<double>(scalars) << " bytes stored)";
      throw BudgetError(os.str());
    }
  }

  // Sampled check on a few full rows and columns of the block.
  bool accurate(const LowRank& lr, const IndexList& rows, const IndexList& cols, std::uint64_t seed) const {
    Rng rng(mix(seed ^ 0x5bd1e995ULL));
    const Index nr = static_cast<Index>(rows.size()), nc = static_cast<Index>(cols.size());
    const auto rr = random_pivots(nr, std::min<Index>(8, nr), rng);
    const auto cc = random_pivots(nc, std::min<Index>(8, nc), rng);
    const Eigen::MatrixXd er = kernel.block(pick(rows, rr), cols);
    const Eigen::MatrixXd ec = kernel.block(rows, pick(cols, cc));
    Eigen::MatrixXd ar(rr.size(), nc), ac(nr, cc.size());
    for (std::size_t i = 0; i < rr.size(); ++i) ar.row(static_cast<Index>(i)) = lr.U.row(rr[i]) * lr.V.transpose();
    for (std::size_t j = 0; j < cc.size(); ++j) ac.col(static_cast<Index>(j)) = lr.U * lr.V.row(cc[j]).transpose();
    const double scale = std::max(er.cwiseAbs().maxCoeff(), ec.cwiseAbs().maxCoeff());
    const double err = std::max((er - ar).cwiseAbs().maxCoeff(), (ec - ac).cwiseAbs().maxCoeff());
    return err <= opt.rank.tau * scale;
  }

  void low_rank(int a, int b) {
    const ClusterNode& A = tree.node(a);
    const ClusterNode& B = tree.node(b);
    const std::uint64_t seed = mix(opt.seed) ^ mix(static_cast<std::uint64_t>(a) * 1000003ULL + static_cast<std::uint64_t>(b));
    const Index nmin = std::min(A.size(), B.size());
    std::optional<LowRank> lr;
    switch (opt.rank.kind) {
      case RankRule::Kind::fixed:
        lr = lowrank_block(kernel, tree, a, b, opt.rank.initial_rank, opt.rank.final_rank, opt.rank.pivots, seed);
        break;
      case RankRule::Kind::log_scaled: {
        const int k = log_scaled_rank(opt.rank.base_rank, nmin, opt.leaf_max);
        lr = lowrank_block(kernel, tree, a, b, 2 * k, k, opt.rank.pivots, seed);
        break;
      }
      case RankRule::Kind::adaptive: {
        const IndexList rows = tree.original_indices(a), cols = tree.original_indices(b);
        for (int k = 1; 2 * k * (A.size() + B.size()) < A.size() * B.size(); k *= 2) {
          auto cand = lowrank_block(kernel, tree, a, b, 2 * k, 2 * k, opt.rank.pivots, seed + static_cast<std::uint64_t>(k),
                                    0.1 * opt.rank.tau);
          if (cand && accurate(*cand, rows, cols, seed + static_cast<std::uint64_t>(k))) {
            lr = std::move(cand);
            break;
          }
        }
        break;
      }
    }
    if (!lr) {
      dense(a, b);
      return;
    }
    HBlock blk = frame(a, b);
    blk.low_rank = true;
    blk.factors = std::move(*lr);
    push(std::move(blk));
  }

  void recurse(int a, int b) {
    const ClusterNode& A = tree.node(a);
    const ClusterNode& B = tree.node(b);
    if (admissible(A, B, opt.eta, opt.distance)) {
      low_rank(a, b);
    } else if (A.leaf() && B.leaf()) {
      dense(a, b);
    } else if (A.leaf()) {
      for (int c : B.children) recurse(a, c);
    } else if (B.leaf()) {
      for (int c : A.children) recurse(c, b);
    } else {
      for (int ca : A.children)
        for (int cb : B.children) recurse(ca, cb);
    }
  }
};

}  // namespace

HMatrix build_hmatrix(const KernelSource& kernel, const ClusterTree& tree, const HOptions& options) {
  if (tree.size() != kernel.size()) throw ConfigError("cluster tree and kernel sizes differ");
  HMatrix H(tree, options);
  Builder b{kernel, tree, options, H};
  b.recurse(tree.root(), tree.root());
  return H;
}

Eigen::VectorXd hmatvec(const HMatrix& H, const Eigen::VectorXd& v) {
  const Index n = H.size();
  if (v.size() != n) throw std::invalid_argument("hmatvec: length mismatch");
  const auto& perm = H.tree().perm();
  Eigen::VectorXd vp(n), yp = Eigen::VectorXd::Zero(n);
  for (Index k = 0; k < n; ++k) vp(k) = v(perm[static_cast<std::size_t>(k)]);
  for (const auto& b : H.blocks()) {
    const auto x = vp.segment(b.col_begin, b.cols());
    if (b.low_rank)
      yp.segment(b.row_begin, b.rows()).noalias() += b.factors.U * (b.factors.V.transpose() * x);
    else
      yp.segment(b.row_begin, b.rows()).noalias() += b.dense * x;
  }
  Eigen::VectorXd y(n);
  for (Index k = 0; k < n; ++k) y(perm[static_cast<std::size_t>(k)]) = yp(k);
  return y;
}

Validation validate_hmatrix(const HMatrix& H, const KernelSource& kernel, Index s, double tau, std::uint64_t seed) {
  if (s < 1) throw ConfigError("validation sample count must be positive");
  Rng rng(seed);
  const auto n = static_cast<std::uint64_t>(H.size());
  double sum = 0.0;
  for (Index t = 0; t < s; ++t) {
    const auto i = static_cast<Index>(rng.index(n)), j = static_cast<Index>(rng.index(n));
    const double exact = kernel.entry(i, j);
    sum += std::abs(H.entry(i, j) - exact) / std::max(std::abs(exact), 1e-12);
  }
  Validation v;
  v.samples = s;
  v.mean_relative_error = sum / static_cast<double>(s);
  v.accepted = v.mean_relative_error <= tau;
  return v;
}

}  // namespace greenpc::compress
