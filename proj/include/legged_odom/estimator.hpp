#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "legged_odom/contact.hpp"
#include "legged_odom/factors.hpp"
#include "legged_odom/gaussian.hpp"
#include "legged_odom/optimizer.hpp"

namespace legged {

enum class Variant {
  kInvariantEkf,
  kInvariantIekf,
  kFixedLagSingle,
  kFixedLagCombined,
  kDeadReckoning,
};

/// Accepts "ekf", "iekf", "fl-single", "fl-combined", "dr"; throws InputError otherwise.
Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

/// Standard deviations of the initial state prior.
struct PriorSigmas {
  double roll = 0.1;       ///< rad
  double pitch = 0.1;      ///< rad
  double yaw = 0.01;       ///< rad
  double position = 1e-4;  ///< m
  double velocity = 0.1;   ///< m/s
  double gyro_bias = 1e-3;  ///< rad/s, smoother bias prior
  double accel_bias = 0.1;  ///< m/s^2, smoother bias prior
};

struct EstimatorConfig {
  std::vector<int> feet{0, 1, 2, 3};
  NoiseConfig noise;
  Variant variant = Variant::kInvariantEkf;
  double max_update_interval = 0.1;  ///< s, periodic contact update interval
  double lag = 2.0;                  ///< s, smoother window length
  bool height_prior = false;
  double terrain_height = 0.0;  ///< m, navigation-frame foothold height for the height prior
  bool robust = false;
  double huber_threshold = kDefaultHuberThreshold;
  Vector3 gravity{0.0, 0.0, -9.81};
  Matrix3 initial_rotation = Matrix3::Identity();
  Vector3 initial_position = Vector3::Zero();
  Vector3 initial_velocity = Vector3::Zero();
  PriorSigmas prior;
  /// Subtractive bias used by the filters and dead reckoning; smoother bias prior mean.
  ImuBias imu_bias;
  LMSettings lm;
  Extrinsic extrinsic;

  /// Throws InputError on an empty or duplicated foot set or non-positive parameters.
  void validate() const;
};

/// Base state at a given time; covariance over [phi, p, v] when available.
struct NavEstimate {
  double t = 0.0;
  SEK3 nav{2};
  std::optional<Matrix> covariance;

  const Matrix3& rotation() const { return nav.rotation(); }
  Vector3 position() const { return nav.column(0); }
  Vector3 velocity() const { return nav.column(1); }
};

/**
 * Shared front half of every variant: zero-order-hold sample handling, the
 * full-contact initializer, and contact-update scheduling (touchdown or
 * max_update_interval since the previous scheduled update).
 */
class Estimator {
 public:
  explicit Estimator(EstimatorConfig config);
  virtual ~Estimator() = default;

  const EstimatorConfig& config() const { return config_; }
  bool initialized() const { return initialized_; }
  /// Time up to which inputs have been integrated.
  double time() const { return time_; }
  int scheduled_update_count() const { return update_count_; }
  double last_update_time() const { return last_update_; }
  /// Stance set recorded at the last scheduled update.
  const std::set<int>& stance() const { return stance_; }

  /// Throws InputError on a timestamp earlier than the last processed input.
  void process_imu(const ImuSample& sample);
  /**
   * Returns true when a scheduled update ran (the initializer counts as one).
   * Before initialization, packets that do not contain every configured foot
   * are ignored. Throws InputError for unknown or repeated feet, or a packet
   * earlier than the last processed input.
   */
  bool process_contact(const ContactPacket& packet);
  /// Estimate at t >= time(), dead-reckoned through the held sample.
  NavEstimate current_estimate(double t) const;
  NavEstimate current_estimate() const { return current_estimate(time_); }

 protected:
  virtual void initialize(const ContactPacket& packet) = 0;
  virtual void propagate(const ImuSample& held, double dt) = 0;
  /// Liftoffs are handled before touchdowns; a foot may appear in both.
  virtual void update(const ContactPacket& packet, const std::vector<int>& liftoffs,
                      const std::vector<int>& touchdowns) = 0;
  /// Estimate `dt` seconds after time() without changing state.
  virtual NavEstimate predict_ahead(double dt) const = 0;

  const std::optional<ImuSample>& held_sample() const { return held_; }
  /// Position of a foot id in config().feet; throws InputError when unknown.
  int foot_index(int foot_id) const;

 private:
  void advance_to(double t);

  EstimatorConfig config_;
  bool initialized_ = false;
  double time_ = 0.0;
  bool has_time_ = false;
  std::optional<ImuSample> held_;
  double last_update_ = 0.0;
  int update_count_ = 0;
  std::set<int> stance_;
};

/**
 * Invariant filter on SE_{k+2}(3) with columns [p, v, f_1..f_k]. The
 * correction is either a joint EKF update (kInvariantEkf), a local
 * prior-plus-contacts graph solved by LM (kInvariantIekf), or absent
 * (kDeadReckoning: prediction only).
 */
class InvariantFilter : public Estimator {
 public:
  explicit InvariantFilter(EstimatorConfig config);

  const GaussianBelief& belief() const { return belief_; }
  /// SE_K(3) column holding a foot's foothold.
  int foot_column(int foot_id) const { return 2 + foot_index(foot_id); }
  /// z - h for every foot of the packet at the current mean.
  std::vector<Vector3> contact_residuals(const ContactPacket& packet) const;

 protected:
  void initialize(const ContactPacket& packet) override;
  void propagate(const ImuSample& held, double dt) override;
  void update(const ContactPacket& packet, const std::vector<int>& liftoffs,
              const std::vector<int>& touchdowns) override;
  NavEstimate predict_ahead(double dt) const override;
  /// Zeroes the slot's cross-covariance and gives it sigma_f^2 I.
  void reset_slot(int foot_id);

 private:
  void correct(const ContactPacket& packet, const std::vector<int>& touchdowns);

  GaussianBelief belief_;
};

/**
 * Fixed-lag smoother over contact events: one nav-state per scheduled update,
 * one landmark per contact episode, and either one shared bias
 * (kFixedLagSingle) or one bias per event (kFixedLagCombined).
 */
class FixedLagSmoother : public Estimator {
 public:
  explicit FixedLagSmoother(EstimatorConfig config);

  bool combined() const { return config().variant == Variant::kFixedLagCombined; }
  const Values& values() const { return values_; }
  const FactorGraph& graph() const { return graph_; }
  std::uint32_t latest_event() const { return latest_event_; }
  double event_time(std::uint32_t event) const { return event_time_.at(event); }
  /// Event indices currently in the window, oldest first.
  std::vector<std::uint32_t> window_events() const;
  /// Landmark key of a foot's current episode, if the foot is in stance.
  std::optional<Key> active_landmark(int foot_id) const;
  /// Final values of landmarks that have left the window.
  const std::map<Key, Vector3>& retired_landmarks() const { return retired_; }
  ImuBias latest_bias() const;

 protected:
  void initialize(const ContactPacket& packet) override;
  void propagate(const ImuSample& held, double dt) override;
  void update(const ContactPacket& packet, const std::vector<int>& liftoffs,
              const std::vector<int>& touchdowns) override;
  NavEstimate predict_ahead(double dt) const override;

 private:
  Key latest_bias_key() const;
  void start_episode(int foot_id, const SEK3& nav, const Vector3& z);
  void add_contacts(Key nav, const ContactPacket& packet, double t);
  void optimize();
  void marginalize();

  Values values_;
  FactorGraph graph_;
  std::uint32_t latest_event_ = 0;
  std::map<std::uint32_t, double> event_time_;
  std::map<int, Key> active_;
  std::map<int, std::uint32_t> episodes_;
  std::map<Key, double> landmark_seen_;
  std::map<Key, Vector3> retired_;
  PreintegratedImu pim_;
  std::optional<Matrix> latest_covariance_;
};

std::unique_ptr<Estimator> make_estimator(const EstimatorConfig& config);

}  // namespace legged
