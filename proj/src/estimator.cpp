#include "legged_odom/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "legged_odom/errors.hpp"

namespace legged {

namespace {

// Scheduling comparisons tolerate timestamp round-off on nominal grids.
constexpr double kTimeEps = 1e-9;

Vector nav_prior_sigmas(const PriorSigmas& p) {
  Vector s(9);
  s << p.roll, p.pitch, p.yaw, Vector3::Constant(p.position), Vector3::Constant(p.velocity);
  return s;
}

SEK3 initial_nav(const EstimatorConfig& c) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> cols(3, 2);
  cols << c.initial_position, c.initial_velocity;
  return SEK3(c.initial_rotation, cols);
}

const ContactMeasurement* find_foot(const ContactPacket& packet, int foot_id) {
  for (const auto& m : packet.feet) {
    if (m.foot_id == foot_id) return &m;
  }
  return nullptr;
}

}  // namespace

Variant parse_variant(const std::string& name) {
  if (name == "ekf") return Variant::kInvariantEkf;
  if (name == "iekf") return Variant::kInvariantIekf;
  if (name == "fl-single") return Variant::kFixedLagSingle;
  if (name == "fl-combined") return Variant::kFixedLagCombined;
  if (name == "dr") return Variant::kDeadReckoning;
  throw InputError("unknown variant '" + name + "' (expected ekf|iekf|fl-single|fl-combined|dr)");
}

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kInvariantEkf: return "ekf";
    case Variant::kInvariantIekf: return "iekf";
    case Variant::kFixedLagSingle: return "fl-single";
    case Variant::kFixedLagCombined: return "fl-combined";
    case Variant::kDeadReckoning: return "dr";
  }
  return "?";
}

void EstimatorConfig::validate() const {
  noise.validate();
  if (feet.empty()) throw InputError("config: foot set is empty");
  std::set<int> unique(feet.begin(), feet.end());
  if (unique.size() != feet.size()) throw InputError("config: duplicate foot id");
  if (!(max_update_interval > 0.0)) throw InputError("config: max_update_interval must be > 0");
  if (!(lag > 0.0)) throw InputError("config: lag must be > 0");
  if (!(huber_threshold > 0.0)) throw InputError("config: huber_threshold must be > 0");
  for (double s : {prior.roll, prior.pitch, prior.yaw, prior.position, prior.velocity,
                   prior.gyro_bias, prior.accel_bias}) {
    if (!(s > 0.0)) throw InputError("config: prior sigmas must be > 0");
  }
  if (so3::orthogonality_defect(initial_rotation) > 1e-6) {
    throw InputError("config: initial rotation is not orthonormal");
  }
}

// ---------------------------------------------------------------------------

Estimator::Estimator(EstimatorConfig config) : config_(std::move(config)) { config_.validate(); }

int Estimator::foot_index(int foot_id) const {
  const auto it = std::find(config_.feet.begin(), config_.feet.end(), foot_id);
  if (it == config_.feet.end()) throw InputError("unknown foot id " + std::to_string(foot_id));
  return static_cast<int>(it - config_.feet.begin());
}

void Estimator::advance_to(double t) {
  if (initialized_ && held_ && t > time_) propagate(*held_, t - time_);
  time_ = t;
  has_time_ = true;
}

void Estimator::process_imu(const ImuSample& sample) {
  if (has_time_ && sample.t < time_) {
    throw InputError("IMU sample at t=" + std::to_string(sample.t) +
                     " is earlier than the last processed input");
  }
  advance_to(sample.t);
  held_ = sample;
}

bool Estimator::process_contact(const ContactPacket& packet) {
  if (has_time_ && packet.t < time_) {
    throw InputError("contact packet at t=" + std::to_string(packet.t) +
                     " is earlier than the last processed input");
  }
  std::set<int> present;
  for (const auto& m : packet.feet) {
    foot_index(m.foot_id);
    if (!present.insert(m.foot_id).second) {
      throw InputError("foot id " + std::to_string(m.foot_id) + " repeated in packet");
    }
  }
  advance_to(packet.t);

  if (!initialized_) {
    if (present.size() != config_.feet.size()) return false;
    initialize(packet);
    initialized_ = true;
    stance_ = present;
    last_update_ = packet.t;
    ++update_count_;
    return true;
  }

  std::vector<int> touchdowns;
  for (const auto& m : packet.feet) {
    if (m.touchdown || !stance_.count(m.foot_id)) touchdowns.push_back(m.foot_id);
  }
  if (touchdowns.empty() &&
      packet.t - last_update_ < config_.max_update_interval - kTimeEps) {
    return false;
  }
  std::vector<int> liftoffs;
  for (int id : stance_) {
    const bool retouched = std::find(touchdowns.begin(), touchdowns.end(), id) != touchdowns.end();
    if (!present.count(id) || retouched) liftoffs.push_back(id);
  }
  update(packet, liftoffs, touchdowns);
  stance_ = present;
  last_update_ = packet.t;
  ++update_count_;
  return true;
}

NavEstimate Estimator::current_estimate(double t) const {
  if (!initialized_) throw StructureError("current_estimate: estimator is not initialized");
  if (t < time_ - kTimeEps) {
    throw InputError("current_estimate: t=" + std::to_string(t) +
                     " is before the last processed input");
  }
  NavEstimate e = predict_ahead(std::max(0.0, t - time_));
  e.t = t;
  return e;
}

// ---------------------------------------------------------------------------

InvariantFilter::InvariantFilter(EstimatorConfig config) : Estimator(std::move(config)) {
  const Variant v = this->config().variant;
  if (v != Variant::kInvariantEkf && v != Variant::kInvariantIekf &&
      v != Variant::kDeadReckoning) {
    throw InputError("InvariantFilter: variant must be ekf, iekf or dr");
  }
}

void InvariantFilter::initialize(const ContactPacket& packet) {
  const auto& c = config();
  const int k = static_cast<int>(c.feet.size());
  const SEK3 nav = initial_nav(c);
  Eigen::Matrix<double, 3, Eigen::Dynamic> cols(3, k + 2);
  cols.col(0) = nav.column(0);
  cols.col(1) = nav.column(1);
  for (const auto& m : packet.feet) {
    cols.col(foot_column(m.foot_id)) = nav.column(0) + nav.rotation() * m.position;
  }
  belief_.mean = SEK3(nav.rotation(), cols);
  belief_.covariance = Matrix::Zero(3 * (k + 3), 3 * (k + 3));
  belief_.covariance.topLeftCorner(9, 9) = nav_prior_sigmas(c.prior).array().square().matrix().asDiagonal();
  const double sf2 = c.noise.foothold_init_sigma * c.noise.foothold_init_sigma;
  belief_.covariance.bottomRightCorner(3 * k, 3 * k) = sf2 * Matrix::Identity(3 * k, 3 * k);

  if (c.variant == Variant::kDeadReckoning) return;
  std::vector<int> all(c.feet.begin(), c.feet.end());
  correct(packet, all);
}

void InvariantFilter::propagate(const ImuSample& held, double dt) {
  const auto& c = config();
  const Prediction pred = predict(belief_.mean, held, c.imu_bias, c.gravity, dt);
  const Matrix& A = pred.jacobian;
  Matrix P = A * belief_.covariance * A.transpose() +
             process_noise(c.noise, dt, belief_.mean.num_columns());
  belief_.covariance = 0.5 * (P + P.transpose());
  belief_.mean = pred.state;
}

NavEstimate InvariantFilter::predict_ahead(double dt) const {
  SEK3 X = belief_.mean;
  Matrix P = belief_.covariance;
  if (dt > 0.0 && held_sample()) {
    const auto& c = config();
    const Prediction pred = predict(X, *held_sample(), c.imu_bias, c.gravity, dt);
    P = pred.jacobian * P * pred.jacobian.transpose() + process_noise(c.noise, dt, X.num_columns());
    X = pred.state;
  }
  NavEstimate e;
  Eigen::Matrix<double, 3, Eigen::Dynamic> cols(3, 2);
  cols << X.column(0), X.column(1);
  e.nav = SEK3(X.rotation(), cols);
  e.covariance = P.topLeftCorner(9, 9);
  return e;
}

void InvariantFilter::reset_slot(int foot_id) {
  const int o = 3 * (foot_column(foot_id) + 1);
  Matrix& P = belief_.covariance;
  P.middleRows(o, 3).setZero();
  P.middleCols(o, 3).setZero();
  const double sf = config().noise.foothold_init_sigma;
  P.block<3, 3>(o, o) = sf * sf * Matrix3::Identity();
}

void InvariantFilter::update(const ContactPacket& packet, const std::vector<int>& liftoffs,
                             const std::vector<int>& touchdowns) {
  if (config().variant == Variant::kDeadReckoning) return;
  for (int id : liftoffs) reset_slot(id);
  for (int id : touchdowns) {
    reset_slot(id);
    const ContactMeasurement* m = find_foot(packet, id);
    const SEK3& X = belief_.mean;
    belief_.mean.set_column(foot_column(id), X.column(0) + X.rotation() * m->position);
  }
  correct(packet, touchdowns);
}

void InvariantFilter::correct(const ContactPacket& packet, const std::vector<int>& touchdowns) {
  const auto& c = config();
  if (packet.feet.empty()) return;
  const double sc2 = c.noise.contact_sigma * c.noise.contact_sigma;
  const double sh2 = c.noise.height_sigma * c.noise.height_sigma;

  if (c.variant == Variant::kInvariantEkf) {
    const int n_height = c.height_prior ? static_cast<int>(touchdowns.size()) : 0;
    const int rows = 3 * static_cast<int>(packet.feet.size()) + n_height;
    Matrix H(rows, belief_.mean.dim());
    Vector innovation(rows);
    Vector noise(rows);
    int r = 0;
    for (const auto& m : packet.feet) {
      const FilterMeasurement fm = contact_residual_filter(belief_.mean, foot_column(m.foot_id),
                                                           m.position);
      H.middleRows(r, 3) = fm.H;
      innovation.segment(r, 3) = fm.residual;
      noise.segment(r, 3).setConstant(sc2);
      r += 3;
    }
    for (int i = 0; i < n_height; ++i) {
      const FilterMeasurement fm =
          height_residual_filter(belief_.mean, foot_column(touchdowns[i]), c.terrain_height);
      H.row(r) = fm.H;
      innovation(r) = fm.residual(0);
      noise(r) = sh2;
      ++r;
    }
    belief_ = ekf_update(belief_, H, innovation, noise.asDiagonal().toDenseMatrix());
    return;
  }

  const Key s = state_key();
  FactorGraph graph;
  graph.push_back(std::make_shared<GroupPriorFactor>(
      s, belief_.mean, NoiseModel::from_covariance(belief_.covariance)));
  for (const auto& m : packet.feet) {
    NoiseModel noise = NoiseModel::isotropic(3, c.noise.contact_sigma);
    if (c.robust) noise = noise.with_huber(c.huber_threshold);
    graph.push_back(std::make_shared<FilterContactFactor>(s, foot_column(m.foot_id), m.position,
                                                          std::move(noise)));
  }
  if (c.height_prior) {
    for (int id : touchdowns) {
      graph.push_back(std::make_shared<FilterHeightFactor>(s, foot_column(id), c.terrain_height,
                                                           c.noise.height_sigma));
    }
  }
  Values initial;
  initial.insert(s, belief_.mean);
  const LMResult result = lm_optimize(graph, initial, c.lm, {s});
  belief_.mean = result.values.group(s);
  belief_.covariance = result.marginals.at(s);
}

std::vector<Vector3> InvariantFilter::contact_residuals(const ContactPacket& packet) const {
  std::vector<Vector3> out;
  for (const auto& m : packet.feet) {
    out.push_back(
        contact_residual_filter(belief_.mean, foot_column(m.foot_id), m.position).residual);
  }
  return out;
}

// ---------------------------------------------------------------------------

FixedLagSmoother::FixedLagSmoother(EstimatorConfig config) : Estimator(std::move(config)) {
  const Variant v = this->config().variant;
  if (v != Variant::kFixedLagSingle && v != Variant::kFixedLagCombined) {
    throw InputError("FixedLagSmoother: variant must be fl-single or fl-combined");
  }
}

Key FixedLagSmoother::latest_bias_key() const {
  return combined() ? bias_key(latest_event_) : bias_key(0);
}

ImuBias FixedLagSmoother::latest_bias() const {
  return ImuBias::from_vector(values_.vector(latest_bias_key()));
}

std::vector<std::uint32_t> FixedLagSmoother::window_events() const {
  std::vector<std::uint32_t> out;
  for (const auto& [e, t] : event_time_) out.push_back(e);
  return out;
}

std::optional<Key> FixedLagSmoother::active_landmark(int foot_id) const {
  const auto it = active_.find(foot_id);
  if (it == active_.end()) return std::nullopt;
  return it->second;
}

void FixedLagSmoother::start_episode(int foot_id, const SEK3& nav, const Vector3& z) {
  const auto& c = config();
  const std::uint32_t episode = episodes_[foot_id]++;
  const Key l = landmark_key(static_cast<std::uint32_t>(foot_id), episode);
  const Vector3 f = nav.column(0) + nav.rotation() * z;
  values_.insert(l, Vector(f));
  active_[foot_id] = l;
  graph_.push_back(std::make_shared<VectorPriorFactor>(
      l, Vector(f), NoiseModel::isotropic(3, c.noise.foothold_init_sigma)));
  if (c.height_prior) {
    graph_.push_back(
        std::make_shared<LandmarkHeightFactor>(l, c.terrain_height, c.noise.height_sigma));
  }
}

void FixedLagSmoother::add_contacts(Key nav, const ContactPacket& packet, double t) {
  const auto& c = config();
  for (const auto& m : packet.feet) {
    const Key l = active_.at(m.foot_id);
    graph_.push_back(
        contact_factor_landmark(nav, l, m.position, c.noise.contact_sigma, c.robust,
                                c.huber_threshold));
    landmark_seen_[l] = t;
  }
}

void FixedLagSmoother::initialize(const ContactPacket& packet) {
  const auto& c = config();
  latest_event_ = 0;
  const Key x0 = nav_key(0);
  const SEK3 nav = initial_nav(c);
  values_.insert(x0, nav);
  values_.insert(bias_key(0), Vector(c.imu_bias.vector()));
  event_time_[0] = packet.t;
  graph_.push_back(std::make_shared<GroupPriorFactor>(
      x0, nav, NoiseModel::from_sigmas(nav_prior_sigmas(c.prior))));
  Vector bias_sigmas(6);
  bias_sigmas << Vector3::Constant(c.prior.gyro_bias), Vector3::Constant(c.prior.accel_bias);
  graph_.push_back(std::make_shared<VectorPriorFactor>(bias_key(0), Vector(c.imu_bias.vector()),
                                                       NoiseModel::from_sigmas(bias_sigmas)));
  for (const auto& m : packet.feet) start_episode(m.foot_id, nav, m.position);
  add_contacts(x0, packet, packet.t);
  optimize();
  pim_ = PreintegratedImu(latest_bias(), c.noise);
}

void FixedLagSmoother::propagate(const ImuSample& held, double dt) {
  pim_.integrate(held.gyro, held.accel, dt);
}

void FixedLagSmoother::update(const ContactPacket& packet, const std::vector<int>& liftoffs,
                              const std::vector<int>& touchdowns) {
  const auto& c = config();
  if (!(pim_.delta_time() > 0.0)) {
    // No inertial interval since the previous event; keep the window as is.
    for (int id : liftoffs) active_.erase(id);
    for (int id : touchdowns) {
      const ContactMeasurement* m = find_foot(packet, id);
      start_episode(id, values_.group(nav_key(latest_event_)), m->position);
    }
    add_contacts(nav_key(latest_event_), packet, packet.t);
    optimize();
    return;
  }

  const std::uint32_t i = latest_event_;
  const std::uint32_t j = i + 1;
  const SEK3& nav_i = values_.group(nav_key(i));
  const Key bi = latest_bias_key();
  const ImuBias bias = ImuBias::from_vector(values_.vector(bi));
  const SEK3 nav_j = pim_.predict(nav_i, bias, c.gravity);
  values_.insert(nav_key(j), nav_j);
  if (combined()) {
    values_.insert(bias_key(j), values_.vector(bi));
    graph_.push_back(std::make_shared<CombinedImuFactor>(nav_key(i), nav_key(j), bi, bias_key(j),
                                                         pim_, c.gravity));
  } else {
    graph_.push_back(std::make_shared<ImuFactor>(nav_key(i), nav_key(j), bi, pim_, c.gravity));
  }
  latest_event_ = j;
  event_time_[j] = packet.t;

  for (int id : liftoffs) active_.erase(id);
  for (int id : touchdowns) start_episode(id, nav_j, find_foot(packet, id)->position);
  add_contacts(nav_key(j), packet, packet.t);
  optimize();
  marginalize();
  pim_ = PreintegratedImu(latest_bias(), c.noise);
}

void FixedLagSmoother::optimize() {
  const Key x = nav_key(latest_event_);
  const LMResult result = lm_optimize(graph_, values_, config().lm, {x});
  values_ = result.values;
  latest_covariance_ = result.marginals.at(x);
}

void FixedLagSmoother::marginalize() {
  const double cutoff = event_time_.at(latest_event_) - config().lag;
  std::set<Key> drop;
  std::vector<std::uint32_t> old_events;
  for (const auto& [e, t] : event_time_) {
    if (e == latest_event_ || t >= cutoff) continue;
    old_events.push_back(e);
    drop.insert(nav_key(e));
    if (combined()) drop.insert(bias_key(e));
  }
  std::vector<Key> old_landmarks;
  for (const auto& [l, t] : landmark_seen_) {
    if (t < cutoff) {
      drop.insert(l);
      old_landmarks.push_back(l);
    }
  }
  if (drop.empty()) return;

  WindowMarginalization m = marginalize_window(graph_, values_, drop);
  graph_ = std::move(m.graph);
  for (std::uint32_t e : old_events) event_time_.erase(e);
  for (const Key& l : old_landmarks) {
    retired_[l] = values_.vector(l);
    landmark_seen_.erase(l);
    for (auto it = active_.begin(); it != active_.end();) {
      it = it->second == l ? active_.erase(it) : std::next(it);
    }
  }
  for (const Key& k : drop) values_.erase(k);
}

NavEstimate FixedLagSmoother::predict_ahead(double dt) const {
  NavEstimate e;
  const SEK3& nav = values_.group(nav_key(latest_event_));
  PreintegratedImu pim = pim_;
  if (dt > 0.0 && held_sample()) pim.integrate(held_sample()->gyro, held_sample()->accel, dt);
  if (pim.delta_time() > 0.0) {
    e.nav = pim.predict(nav, latest_bias(), config().gravity);
  } else {
    e.nav = nav;
    e.covariance = latest_covariance_;
  }
  return e;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Estimator> make_estimator(const EstimatorConfig& config) {
  switch (config.variant) {
    case Variant::kInvariantEkf:
    case Variant::kInvariantIekf:
    case Variant::kDeadReckoning:
      return std::make_unique<InvariantFilter>(config);
    case Variant::kFixedLagSingle:
    case Variant::kFixedLagCombined:
      return std::make_unique<FixedLagSmoother>(config);
  }
  throw InputError("unknown variant");
}

}  // namespace legged
