#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace babelbot::perception {

struct Pixel {
  int u = 0;
  int v = 0;
  friend bool operator==(const Pixel &, const Pixel &) = default;
};

struct CameraIntrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  /// Throws InvalidFormat unless fx, fy > 0 and the principal point is inside the image.
  void validate() const;
  [[nodiscard]] double horizontal_half_fov() const;
  static CameraIntrinsics from_json(const nlohmann::json &j);
  [[nodiscard]] nlohmann::json to_json() const;
};

struct PerceptionConfig {
  double temperature = 0.07;
  double q_thresh = 0.6;
  double e_thresh = 0.45;
  double beta = 1.0;
  double lambda1 = 0.6;
  double lambda2 = 0.4;
  double source_confidence_floor = 0.4;
  int neighborhood_radius = 5;

  void validate() const;
  static PerceptionConfig from_json(const nlohmann::json &j);
};

// ---------------------------------------------------------------------------
// Scoring

/// |pixels| over the convex-hull area of the pixel cells. Throws DegenerateMask.
double mask_quality(const std::vector<Pixel> &pixels);

/// Temperature softmax with max subtraction. Throws NonFiniteScore.
std::vector<double> class_distribution(const std::vector<double> &scores, double temperature);

/// -T * log(sum exp(S/T)). Throws NonFiniteScore.
double energy_score(const std::vector<double> &scores, double temperature);

/// p_j e^{-beta eta_j}, renormalized. Throws AllMassDegraded when nothing survives.
std::vector<double> reweight_degradation(const std::vector<double> &p, const std::vector<double> &eta, double beta);

// ---------------------------------------------------------------------------
// Geometry

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> data; // row-major, NaN where missing

  [[nodiscard]] float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
};

/// Stand-in for an external monocular depth model.
class MonocularDepthSource {
public:
  virtual ~MonocularDepthSource() = default;
  /// One prediction per pixel, metres.
  [[nodiscard]] virtual std::vector<double> predict(const std::vector<Pixel> &pixels) const = 0;
};

Pixel mask_centroid(const std::vector<Pixel> &pixels);

/// Median of valid sensor depth around the centroid, else median of the
/// monocular prediction over the mask. Throws NoDepthAvailable.
double centroid_depth(const std::vector<Pixel> &pixels, const DepthImage &depth, int radius,
                      const MonocularDepthSource *mono);

/// Throws NonPositiveDepth.
Eigen::Vector3d back_project(double u, double v, double z, const CameraIntrinsics &k);
/// Pixel coordinates of a camera-frame point with z > 0.
Eigen::Vector2d project(const Eigen::Vector3d &p, const CameraIntrinsics &k);

struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
};

/// Optical camera (x right, y down, z forward) mounted at `height` on a base
/// whose x axis points forward.
RigidTransform default_camera_mount(double height = 0.3);

/// Throws InvalidTransform when the rotation is not orthonormal within 1e-6.
Eigen::Vector3d to_base_frame(const Eigen::Vector3d &point_cam, const RigidTransform &extrinsics);

// ---------------------------------------------------------------------------
// Tracking

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

struct KalmanParams {
  double q_c = 0.01;
  double sigma = 0.05;
  /// Prior velocity variance for a new track (effectively uninformative).
  double initial_velocity_var = 1e4;
};

struct TrackedObject {
  int track_id = 0;
  std::string label;
  Vector6d state = Vector6d::Zero(); // x y z vx vy vz
  Matrix6d covariance = Matrix6d::Identity();
  double last_p_prime = 0.0;
  double last_seen = 0.0;
  [[nodiscard]] Eigen::Vector3d position() const { return state.head<3>(); }
};

Matrix6d transition_matrix(double dt);
Matrix6d process_noise(double dt, double q_c);

TrackedObject new_track(int track_id, std::string label, const Eigen::Vector3d &measurement, double timestamp,
                        const KalmanParams &params = {});
/// Constant-velocity predict over dt. Throws NumericalDivergence.
TrackedObject track_predict(const TrackedObject &track, double dt, const KalmanParams &params = {});
/// Predict then position-only update. Throws NumericalDivergence.
TrackedObject track_update(const TrackedObject &track, const Eigen::Vector3d &measurement, double dt,
                           const KalmanParams &params = {});

/// Per-session set of tracks keyed by label with nearest-neighbour gating.
class TrackRegistry {
public:
  explicit TrackRegistry(KalmanParams params = {}, double gate_m = 1.0) : params_(params), gate_m_(gate_m) {}

  /// Returns the id of the track that absorbed the measurement.
  int observe(const std::string &label, const Eigen::Vector3d &world_point, double p_prime, double timestamp);
  /// Drops tracks not seen for longer than `max_age` seconds.
  void prune(double now, double max_age);

  [[nodiscard]] const std::map<int, TrackedObject> &tracks() const { return tracks_; }
  [[nodiscard]] const TrackedObject *find(int track_id) const;

private:
  KalmanParams params_;
  double gate_m_;
  int next_id_ = 1;
  std::map<int, TrackedObject> tracks_;
};

// ---------------------------------------------------------------------------
// Frames and pipeline

struct MaskCandidate {
  int id = 0;
  std::vector<Pixel> pixels;
  std::vector<std::string> labels;
  std::vector<double> scores;
  std::vector<double> eta;
  double source_confidence = 1.0;
};

struct PerceptionFrame {
  CameraIntrinsics intrinsics;
  std::vector<MaskCandidate> masks;
  DepthImage depth;
};

/// Row-major run lengths, alternating background/foreground, background first.
std::string encode_rle(const std::vector<Pixel> &pixels, int width, int height);
std::vector<Pixel> decode_rle(std::string_view counts, int width, int height);

nlohmann::json frame_to_json(const PerceptionFrame &frame);
/// Throws InvalidFormat.
PerceptionFrame frame_from_json(const nlohmann::json &j);

class PerceptionSource {
public:
  virtual ~PerceptionSource() = default;
  virtual PerceptionFrame next_frame() = 0;
};

/// Replays frames loaded from JSON files in order, repeating the last one.
class FixtureFrameSource final : public PerceptionSource {
public:
  explicit FixtureFrameSource(std::vector<PerceptionFrame> frames);
  static FixtureFrameSource load(const std::vector<std::filesystem::path> &files);
  PerceptionFrame next_frame() override;

private:
  std::vector<PerceptionFrame> frames_;
  std::size_t cursor_ = 0;
};

struct GroundedCandidate {
  int mask_id = 0;
  std::vector<std::string> labels;
  std::vector<double> p;
  std::vector<double> p_prime;
  double quality = 0.0;
  double energy = 0.0;
  Pixel centroid;
  double depth = 0.0;
  Eigen::Vector3d point_cam = Eigen::Vector3d::Zero();
  Eigen::Vector3d point_base = Eigen::Vector3d::Zero();

  [[nodiscard]] std::size_t best_label() const;
};

struct Rejection {
  int mask_id = 0;
  std::string reason; // source_confidence, degenerate, quality, energy, degraded, nonfinite, no_depth
};

struct PipelineResult {
  std::vector<GroundedCandidate> survivors;
  std::vector<Rejection> rejected;
};

/// Source floor, quality filter, energy filter, degradation reweighting, then
/// localization. Candidates are processed in mask-id order.
PipelineResult run_pipeline(const PerceptionFrame &frame, const PerceptionConfig &config,
                            const RigidTransform &camera_to_base, const MonocularDepthSource *mono = nullptr);

// ---------------------------------------------------------------------------
// Target selection

/// Label synonyms per language plus label-to-label affinities.
class SynonymTable {
public:
  static SynonymTable load(const std::filesystem::path &file);
  void add_synonym(const std::string &language, const std::string &label, const std::string &word);
  void set_affinity(const std::string &a, const std::string &b, double value);

  /// 1 for the same label, the table value for related labels, else 0.
  [[nodiscard]] double affinity(const std::string &a, const std::string &b) const;
  /// Words that name `label` in `language` (English words always included).
  [[nodiscard]] std::vector<std::string> words_for(const std::string &label, std::string_view language) const;
  [[nodiscard]] std::vector<std::string> labels() const;

private:
  std::map<std::string, std::map<std::string, std::vector<std::string>>> synonyms_; // lang -> label -> words
  std::map<std::pair<std::string, std::string>, double> affinity_;
};

/// Fraction of the label's words mentioned in the command, directly or via a
/// synonym.
double lexical_similarity(const std::string &label, std::string_view command, const SynonymTable *synonyms,
                          std::string_view language);

using SimilarityFn = std::function<double(const std::string &label, std::string_view command)>;

struct TargetCandidate {
  int track_id = 0;
  std::vector<std::string> labels;
  std::vector<double> p_prime;
};

struct TargetChoice {
  std::size_t candidate = 0;
  std::size_t label = 0;
  int track_id = 0;
  double score = 0.0;
};

double alignment_score(double p_prime, double similarity, const PerceptionConfig &config);

/// argmax of lambda1 log p' + lambda2 sim over all (candidate, label); ties go
/// to the lowest track id, then the lowest label index. Throws NoCandidates.
TargetChoice select_target(const std::vector<TargetCandidate> &candidates, std::string_view command,
                           const PerceptionConfig &config, const SimilarityFn &similarity);

} // namespace babelbot::perception
