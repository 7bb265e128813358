#include "sesdf/calib/refine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "sesdf/body/model_io.hpp"
#include "sesdf/calib/raster.hpp"
#include "sesdf/geometry/rotation.hpp"
#include "sesdf/util/log.hpp"

namespace sesdf {

double FitReport::mean_iou() const {
  if (views.empty()) return 0.0;
  double s = 0.0;
  for (const ViewReport& v : views) s += v.iou;
  return s / static_cast<double>(views.size());
}

nlohmann::json FitReport::to_json() const {
  nlohmann::json j;
  j["initial_objective"] = initial_objective;
  j["final_objective"] = final_objective;
  j["outer_iterations"] = outer_iterations;
  j["accepted_updates"] = accepted_updates;
  j["mean_iou"] = mean_iou();
  j["views"] = nlohmann::json::array();
  for (const ViewReport& v : views) {
    nlohmann::json jv;
    jv["keypoint_rmse"] = v.keypoint_rmse;
    jv["iou"] = v.iou;
    jv["visible_keypoints"] = v.visible_keypoints;
    jv["keypoint_free"] = v.keypoint_free;
    j["views"].push_back(jv);
  }
  return j;
}

SharedFit init_shared_model(const BodyModel& model, const std::vector<PerViewFit>& fits) {
  if (fits.empty()) throw Error("init_shared_model: no per-view fits");
  const int n = static_cast<int>(fits.size());
  for (const PerViewFit& f : fits) f.params.check(model);
  SharedFit out;
  out.params = BodyParams::zeros(model);
  for (const PerViewFit& f : fits) {
    out.params.beta += f.params.beta / n;
    out.params.phi += f.params.phi / n;
  }
  const int root = model.root();
  for (int j = 0; j < model.num_joints(); ++j) {
    if (j == root) continue;
    std::vector<Quat> qs;
    for (const PerViewFit& f : fits) qs.emplace_back(axis_angle_to_matrix(f.params.theta[j]));
    out.params.theta[j] = n == 1 ? fits[0].params.theta[j] : matrix_to_axis_angle(quaternion_mean(qs).toRotationMatrix());
  }
  out.params.theta[root] = fits[0].params.theta[root];
  out.params.translation = fits[0].params.translation;

  // View i saw R_i (R_root_i (x - J0) + J0 + t_i) + T_i; keep that map for
  // the shared root by folding the difference into the rig.
  const Vec3 j0 = rest_joints(model, out.params.beta)[root];
  const Mat3 shared_root = axis_angle_to_matrix(out.params.theta[root]);
  for (int i = 0; i < n; ++i) {
    const PerViewFit& f = fits[i];
    ViewRig rig = f.rig;
    if (i > 0) {
      const Mat3 view_root = axis_angle_to_matrix(f.params.theta[root]);
      rig.rotation = orthonormalize(f.rig.rotation * view_root * shared_root.transpose());
      rig.translation = f.rig.rotation * (j0 + f.params.translation) + f.rig.translation -
                        rig.rotation * (j0 + out.params.translation);
    }
    out.rigs.push_back(rig);
  }
  return out;
}

std::vector<Keypoint> project_joints(const BodyModel& model, const BodyParams& params, const ViewRig& rig) {
  const Skeleton s = pose_skeleton(model, params);
  std::vector<Keypoint> out(s.joints.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].uv = project_orthographic(rig, s.joints[k]).uv;
    out[k].visible = out[k].uv.x() >= 0 && out[k].uv.y() >= 0 && out[k].uv.x() <= rig.width && out[k].uv.y() <= rig.height;
  }
  return out;
}

ViewRig perturb_rig(const ViewRig& rig, double degrees, double translation_fraction, double scene_diagonal, Rng& rng) {
  Vec3 axis(normal(rng), normal(rng), normal(rng));
  axis.normalize();
  const double angle = degrees * std::numbers::pi / 180.0;
  const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  ViewRig out = rig;
  out.rotation = orthonormalize(axis_angle_to_matrix(angle * axis) * rig.rotation);
  out.translation += translation_fraction * scene_diagonal * Vec3(std::cos(phi), std::sin(phi), 0.0);
  return out;
}

double root_offset(const BodyModel& model, const BodyParams& a, const ViewRig& rig_a, const BodyParams& b,
                   const ViewRig& rig_b) {
  const int root = model.root();
  const Vec2 ua = project_orthographic(rig_a, pose_skeleton(model, a).joints[root]).uv;
  const Vec2 ub = project_orthographic(rig_b, pose_skeleton(model, b).joints[root]).uv;
  return (ua - ub).norm() / rig_a.ortho_scale;
}

namespace {

struct State {
  BodyParams params;
  std::vector<ViewRig> rigs;
};

// Unknown layout shared by the LM step and the coordinate sweeps.
struct Layout {
  int ks = 0, ke = 0, nj = 0, nviews = 0;
  bool fix_first = true;
  int beta0 = 0, theta0 = 0, phi0 = 0;
  std::vector<int> rot0, trans0, scale0;  // rot0 = -1 when held fixed
  int size = 0;
  int lm_size = 0;  // phi is not part of the keypoint problem

  Layout(const BodyModel& m, int views) : ks(m.num_shape()), ke(m.num_expr()), nj(m.num_joints()), nviews(views) {
    int n = 0;
    beta0 = n;
    n += ks;
    theta0 = n;
    n += 3 * nj;
    for (int i = 0; i < views; ++i) {
      rot0.push_back(i == 0 ? -1 : n);
      if (i > 0) n += 3;
      trans0.push_back(n);
      n += 2;
      scale0.push_back(n);
      n += 1;
    }
    lm_size = n;
    phi0 = n;
    n += ke;
    size = n;
  }
  int view_of(int k) const {
    for (int i = 0; i < nviews; ++i) {
      if ((rot0[i] >= 0 && k >= rot0[i] && k < rot0[i] + 3) || (k >= trans0[i] && k < trans0[i] + 2) || k == scale0[i]) {
        return i;
      }
    }
    return -1;
  }
};

void apply_step(const Layout& L, const Eigen::VectorXd& d, State& s) {
  for (int k = 0; k < L.ks; ++k) s.params.beta[k] += d[L.beta0 + k];
  for (int j = 0; j < L.nj; ++j) {
    const Vec3 dj = d.segment<3>(L.theta0 + 3 * j);
    if (dj.squaredNorm() > 0) s.params.theta[j] = compose_axis_angle(s.params.theta[j], dj);
  }
  if (d.size() > L.phi0) {
    for (int k = 0; k < L.ke; ++k) s.params.phi[k] += d[L.phi0 + k];
  }
  for (int i = 0; i < L.nviews; ++i) {
    ViewRig& r = s.rigs[i];
    if (L.rot0[i] >= 0) {
      const Vec3 dr = d.segment<3>(L.rot0[i]);
      if (dr.squaredNorm() > 0) r.rotation = orthonormalize(axis_angle_to_matrix(dr) * r.rotation);
    }
    r.translation.x() += d[L.trans0[i]];
    r.translation.y() += d[L.trans0[i] + 1];
    r.ortho_scale *= std::exp(d[L.scale0[i]]);
  }
}

class Problem {
 public:
  Problem(const BodyModel& model, const std::vector<Observation>& obs, const RefineConfig& config)
      : model_(model), obs_(obs), config_(config), layout_(model, static_cast<int>(obs.size())) {
    for (const Observation& o : obs) {
      coarse_masks_.push_back(subsample(o.mask, config.raster_stride));
      total_keypoints_ += o.visible_count();
    }
  }

  const Layout& layout() const { return layout_; }

  struct Cache {
    TriangleMesh posed;
    std::vector<Vec3> joints;
    std::vector<double> sse, iou;
    std::vector<int> count;
    double objective = 0.0;
  };

  Cache evaluate(const State& s) const {
    Cache c;
    c.posed = lbs_forward(model_, s.params);
    c.joints = pose_skeleton(model_, s.params).joints;
    c.sse.resize(obs_.size());
    c.iou.resize(obs_.size());
    c.count.resize(obs_.size());
    for (std::size_t i = 0; i < obs_.size(); ++i) evaluate_view(s, c, i);
    finish(c, s);
    return c;
  }

  // Re-evaluates one view after a rig-only change.
  void evaluate_view(const State& s, Cache& c, std::size_t i) const {
    const ViewRig& rig = s.rigs[i];
    double sse = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < c.joints.size(); ++k) {
      const Keypoint& kp = obs_[i].keypoints[k];
      if (!kp.visible) continue;
      sse += (project_orthographic(rig, c.joints[k]).uv - kp.uv).squaredNorm();
      ++count;
    }
    c.sse[i] = sse;
    c.count[i] = count;
    c.iou[i] = silhouette_iou(rasterize_silhouette(c.posed, rig, config_.raster_stride), coarse_masks_[i]);
  }

  void finish(Cache& c, const State& s) const {
    double sse = 0.0, iou = 0.0;
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      sse += c.sse[i];
      iou += c.iou[i];
    }
    c.objective = sse / std::max(1, total_keypoints_) + config_.iou_weight * (1.0 - iou / static_cast<double>(obs_.size()));
    if (!std::isfinite(c.objective)) {
      nlohmann::json dump;
      dump["params"] = params_to_json(s.params);
      for (const ViewRig& r : s.rigs) dump["rigs"].push_back(rig_to_json(r));
      throw Error("refine_joint: non-finite objective; state: " + dump.dump());
    }
  }

  // Keypoint residuals r (pixels) and Jacobian over the LM unknowns.
  void linearize(const State& s, Eigen::VectorXd& r, Eigen::MatrixXd& J) const {
    const JointJacobian jac = posed_joints_jacobian(model_, s.params);
    r.resize(2 * total_keypoints_);
    J = Eigen::MatrixXd::Zero(2 * total_keypoints_, layout_.lm_size);
    int row = 0;
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      const ViewRig& rig = s.rigs[i];
      const Eigen::Matrix<double, 2, 3> A = rig.ortho_scale * rig.rotation.topRows<2>();
      for (std::size_t k = 0; k < jac.skeleton.joints.size(); ++k) {
        const Keypoint& kp = obs_[i].keypoints[k];
        if (!kp.visible) continue;
        const Vec3& p = jac.skeleton.joints[k];
        const Vec3 cam = rig.to_camera(p);
        r.segment<2>(row) = project_orthographic(rig, p).uv - kp.uv;
        J.block(row, layout_.beta0, 2, layout_.ks) = A * jac.d_beta.middleRows(3 * k, 3);
        J.block(row, layout_.theta0, 2, 3 * layout_.nj) = A * jac.d_theta.middleRows(3 * k, 3);
        if (layout_.rot0[i] >= 0) {
          J.block<2, 3>(row, layout_.rot0[i]) = -rig.ortho_scale * skew(rig.rotation * p).topRows<2>();
        }
        J.block<2, 2>(row, layout_.trans0[i]) = rig.ortho_scale * Eigen::Matrix2d::Identity();
        J.block<2, 1>(row, layout_.scale0[i]) = rig.ortho_scale * cam.head<2>();
        row += 2;
      }
    }
  }

  double full_res_iou(const TriangleMesh& posed, const ViewRig& rig, std::size_t i) const {
    return silhouette_iou(rasterize_silhouette(posed, rig, 1), obs_[i].mask);
  }

  int total_keypoints() const { return total_keypoints_; }

 private:
  const BodyModel& model_;
  const std::vector<Observation>& obs_;
  const RefineConfig& config_;
  Layout layout_;
  std::vector<Mask> coarse_masks_;
  int total_keypoints_ = 0;
};

double keypoint_sse(const Problem::Cache& c) {
  double s = 0.0;
  for (double v : c.sse) s += v;
  return s;
}

// Levenberg-Marquardt on the keypoint residual alone.
int run_lm(const Problem& P, const RefineConfig& config, State& s, Problem::Cache& c) {
  if (P.total_keypoints() == 0) return 0;
  const Layout& L = P.layout();
  double lambda = 1e-3;
  int accepted = 0;
  for (int it = 0; it < config.lm_iterations; ++it) {
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    P.linearize(s, r, J);
    const Eigen::MatrixXd H = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.norm() < 1e-12) break;
    const double floor = 1e-9 * std::max(1.0, H.diagonal().maxCoeff());
    bool improved = false;
    for (int attempt = 0; attempt < 8 && !improved; ++attempt) {
      Eigen::MatrixXd A = H;
      for (int k = 0; k < L.lm_size; ++k) A(k, k) += lambda * std::max(H(k, k), floor) + floor;
      const Eigen::VectorXd d = A.ldlt().solve(-g);
      if (!d.allFinite()) {
        lambda *= 10;
        continue;
      }
      State trial = s;
      apply_step(L, d, trial);
      Problem::Cache tc = P.evaluate(trial);
      if (keypoint_sse(tc) < keypoint_sse(c)) {
        s = std::move(trial);
        c = std::move(tc);
        lambda = std::max(lambda / 3.0, 1e-9);
        improved = true;
        ++accepted;
      } else {
        lambda *= 4.0;
      }
    }
    if (!improved) break;
  }
  return accepted;
}

// Coordinate descent with +/- steps on the combined objective.
int run_sweeps(const Problem& P, const RefineConfig& config, State& s, Problem::Cache& c) {
  const Layout& L = P.layout();
  std::vector<double> step(L.size, 0.0);
  const double deg = std::numbers::pi / 180.0;
  if (config.sweep_shape) {
    for (int k = 0; k < L.ks; ++k) step[L.beta0 + k] = 0.05;
    for (int k = 0; k < 3 * L.nj; ++k) step[L.theta0 + k] = 1.0 * deg;
    for (int k = 0; k < L.ke; ++k) step[L.phi0 + k] = 0.25;
  }
  for (int i = 0; i < L.nviews; ++i) {
    if (L.rot0[i] >= 0) {
      for (int a = 0; a < 3; ++a) step[L.rot0[i] + a] = 0.25 * deg;
    }
    const double px = config.raster_stride / s.rigs[i].ortho_scale;  // one raster pixel in scene units
    step[L.trans0[i]] = step[L.trans0[i] + 1] = 0.5 * px;
    step[L.scale0[i]] = 0.005;
  }
  int accepted = 0;
  for (int halving = 0; halving <= config.sweep_halvings;) {
    bool any = false;
    for (int k = 0; k < L.size; ++k) {
      if (step[k] == 0.0) continue;
      const int view = L.view_of(k);
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd d = Eigen::VectorXd::Zero(L.size);
        d[k] = sign * step[k];
        State trial = s;
        apply_step(L, d, trial);
        Problem::Cache tc;
        if (view >= 0) {
          tc = c;
          P.evaluate_view(trial, tc, static_cast<std::size_t>(view));
          P.finish(tc, trial);
        } else {
          tc = P.evaluate(trial);
        }
        if (tc.objective < c.objective - 1e-12) {
          s = std::move(trial);
          c = std::move(tc);
          any = true;
          ++accepted;
          break;
        }
      }
    }
    if (!any) {
      ++halving;
      for (double& v : step) v *= 0.5;
    }
  }
  return accepted;
}

}  // namespace

double combined_objective(const BodyModel& model, const BodyParams& params, const std::vector<ViewRig>& rigs,
                          const std::vector<Observation>& observations, const RefineConfig& config) {
  const Problem P(model, observations, config);
  return P.evaluate(State{params, rigs}).objective;
}

RefineResult refine_joint(const BodyModel& model, const BodyParams& shared, const std::vector<ViewRig>& rigs,
                          const std::vector<Observation>& observations, const RefineConfig& config) {
  if (observations.empty() || observations.size() != rigs.size()) {
    throw Error("refine_joint: need one observation per rig and at least one view");
  }
  shared.check(model);
  bool solvable = false;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    rigs[i].check();
    if (static_cast<int>(observations[i].keypoints.size()) != model.num_joints()) {
      throw Error("refine_joint: keypoint count does not match the model joints");
    }
    if (observations[i].mask.width != rigs[i].width || observations[i].mask.height != rigs[i].height) {
      throw Error("refine_joint: mask size does not match the rig image size");
    }
    solvable |= observations[i].visible_count() >= 4;
  }
  if (!solvable) throw Error("refine_joint: unsolvable, no view has 4 visible keypoints");

  const Problem P(model, observations, config);
  State s{shared, rigs};
  Problem::Cache c = P.evaluate(s);
  FitReport report;
  report.initial_objective = c.objective;

  // Coarse alternation, then the same at the polish stride; a phase result
  // is kept only while the coarse objective stays at or below the input's.
  const auto run_phase = [&](const Problem& Q, const RefineConfig& cfg, State start) {
    Problem::Cache qc = Q.evaluate(start);
    State best = start;
    Problem::Cache best_cache = qc;
    for (int outer = 0; outer < cfg.max_outer_iterations; ++outer) {
      const double before = best_cache.objective;
      const int changes = run_lm(Q, cfg, start, qc) + run_sweeps(Q, cfg, start, qc);
      report.accepted_updates += changes;
      ++report.outer_iterations;
      if (qc.objective < best_cache.objective) {
        best = start;
        best_cache = qc;
      }
      if (changes == 0 || before - best_cache.objective < cfg.tolerance) break;
    }
    State polished = best;
    Problem::Cache polished_cache = best_cache;
    const int polish = run_lm(Q, cfg, polished, polished_cache);
    if (polish > 0 && polished_cache.objective <= best_cache.objective + cfg.tolerance) {
      report.accepted_updates += polish;
      best = std::move(polished);
    }
    return best;
  };
  State coarse = run_phase(P, config, s);
  if (P.evaluate(coarse).objective <= c.objective) s = coarse;
  if (config.polish_stride > 0 && config.polish_stride < config.raster_stride) {
    RefineConfig fine_config = config;
    fine_config.raster_stride = config.polish_stride;
    fine_config.sweep_halvings = config.polish_halvings;
    const Problem F(model, observations, fine_config);
    State fine = run_phase(F, fine_config, s);
    if (P.evaluate(fine).objective <= c.objective) s = fine;
  }
  c = P.evaluate(s);
  report.final_objective = c.objective;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    ViewReport v;
    v.visible_keypoints = c.count[i];
    v.keypoint_free = c.count[i] == 0;
    v.keypoint_rmse = c.count[i] ? std::sqrt(c.sse[i] / c.count[i]) : 0.0;
    v.iou = P.full_res_iou(c.posed, s.rigs[i], i);
    report.views.push_back(v);
    if (v.keypoint_free) log::info("refine_joint: view " + std::to_string(i) + " is keypoint-free; fitted by silhouette only");
  }
  return {s.params, s.rigs, report};
}

std::vector<PerViewFit> initialize_from_keypoints(const BodyModel& model, const std::vector<Observation>& observations,
                                                  int width, int height, double yaw_step_degrees) {
  const BodyParams rest = BodyParams::zeros(model);
  const std::vector<Vec3> joints = pose_skeleton(model, rest).joints;
  std::vector<PerViewFit> fits;
  for (const Observation& obs : observations) {
    PerViewFit best{rest, ViewRig{}};
    best.rig.width = width;
    best.rig.height = height;
    double best_err = std::numeric_limits<double>::infinity();
    const Vec2 center(0.5 * width, 0.5 * height);
    for (double yaw = 0.0; yaw < 360.0; yaw += yaw_step_degrees) {
      const Mat3 R = rotation_y(yaw * std::numbers::pi / 180.0);
      // u - center = s q + b, solved in closed form for (s, b).
      Eigen::MatrixXd A(2 * obs.keypoints.size(), 3);
      Eigen::VectorXd y(2 * obs.keypoints.size());
      int rows = 0;
      for (std::size_t k = 0; k < obs.keypoints.size(); ++k) {
        if (!obs.keypoints[k].visible) continue;
        const Vec3 q = R * joints[k];
        A.row(rows) << q.x(), 1, 0;
        y[rows++] = obs.keypoints[k].uv.x() - center.x();
        A.row(rows) << q.y(), 0, 1;
        y[rows++] = obs.keypoints[k].uv.y() - center.y();
      }
      if (rows < 6) break;
      const Eigen::Vector3d x = A.topRows(rows).colPivHouseholderQr().solve(y.head(rows));
      if (!(x[0] > 0)) continue;
      const double err = (A.topRows(rows) * x - y.head(rows)).squaredNorm();
      if (err < best_err) {
        best_err = err;
        best.rig.rotation = R;
        best.rig.ortho_scale = x[0];
        best.rig.translation = Vec3(x[1] / x[0], x[2] / x[0], 0.0);
      }
    }
    if (!std::isfinite(best_err)) {
      // Too few keypoints: frame the rest-pose body in the image.
      Aabb box;
      for (const Vec3& j : joints) box.extend(j);
      best.rig.ortho_scale = 0.8 * std::min(width, height) / std::max(box.diagonal(), 1e-9);
      best.rig.translation = -box.center();
      best.rig.translation.z() = 0.0;
    }
    fits.push_back(best);
  }
  return fits;
}

}  // namespace sesdf
