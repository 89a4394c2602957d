#include "babelbot/perception.hpp"

#include "babelbot/error.hpp"
#include "babelbot/text.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace babelbot::perception {

using nlohmann::json;

namespace {

bool all_finite(const std::vector<double> &v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string base64_encode(const unsigned char *data, std::size_t n) {
  std::string out(4 * ((n + 2) / 3), '\0');
  const int written = EVP_EncodeBlock(reinterpret_cast<unsigned char *>(out.data()), data, static_cast<int>(n));
  out.resize(static_cast<std::size_t>(written));
  return out;
}

std::vector<unsigned char> base64_decode(std::string_view s) {
  if (s.size() % 4 != 0) {
    fail(ErrorCode::InvalidFormat, "base64 length is not a multiple of 4");
  }
  std::vector<unsigned char> out(3 * s.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char *>(s.data()), static_cast<int>(s.size()));
  if (n < 0) {
    fail(ErrorCode::InvalidFormat, "invalid base64");
  }
  std::size_t pad = 0;
  for (std::size_t i = s.size(); i > 0 && s[i - 1] == '='; --i) {
    ++pad;
  }
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

} // namespace

// ---------------------------------------------------------------------------
// Config

void CameraIntrinsics::validate() const {
  if (!(fx > 0 && fy > 0) || width <= 0 || height <= 0 || !(cx >= 0 && cx <= width) || !(cy >= 0 && cy <= height)) {
    fail(ErrorCode::InvalidFormat, "invalid camera intrinsics");
  }
}

double CameraIntrinsics::horizontal_half_fov() const {
  return std::max(std::atan2(cx, fx), std::atan2(width - cx, fx));
}

CameraIntrinsics CameraIntrinsics::from_json(const json &j) {
  CameraIntrinsics k;
  k.fx = j.value("fx", k.fx);
  k.fy = j.value("fy", k.fy);
  k.cx = j.value("cx", k.cx);
  k.cy = j.value("cy", k.cy);
  k.width = j.value("width", k.width);
  k.height = j.value("height", k.height);
  k.validate();
  return k;
}

json CameraIntrinsics::to_json() const {
  return {{"fx", fx}, {"fy", fy}, {"cx", cx}, {"cy", cy}, {"width", width}, {"height", height}};
}

void PerceptionConfig::validate() const {
  const auto in01 = [](double x) { return x >= 0 && x <= 1; };
  if (!(temperature > 0) || !in01(q_thresh) || !in01(source_confidence_floor) || !(beta >= 0) || !(lambda1 > 0) ||
      !(lambda2 > 0) || neighborhood_radius < 1 || !std::isfinite(e_thresh)) {
    fail(ErrorCode::InvalidFormat, "perception config out of range");
  }
}

PerceptionConfig PerceptionConfig::from_json(const json &j) {
  PerceptionConfig c;
  c.temperature = j.value("softmax_temperature", c.temperature);
  c.q_thresh = j.value("q_thresh", c.q_thresh);
  c.e_thresh = j.value("e_thresh", c.e_thresh);
  c.beta = j.value("beta", c.beta);
  c.lambda1 = j.value("lambda1", c.lambda1);
  c.lambda2 = j.value("lambda2", c.lambda2);
  c.source_confidence_floor = j.value("source_confidence_floor", c.source_confidence_floor);
  c.neighborhood_radius = j.value("neighborhood_radius", c.neighborhood_radius);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Scoring

double mask_quality(const std::vector<Pixel> &input) {
  std::vector<Pixel> pixels = input;
  std::sort(pixels.begin(), pixels.end(), [](Pixel a, Pixel b) { return std::tie(a.u, a.v) < std::tie(b.u, b.v); });
  pixels.erase(std::unique(pixels.begin(), pixels.end()), pixels.end());
  if (pixels.size() < 3) {
    fail(ErrorCode::DegenerateMask, "mask has fewer than 3 pixels");
  }
  const auto a = pixels[0];
  const auto b = pixels[1];
  const bool collinear = std::all_of(pixels.begin() + 2, pixels.end(), [&](Pixel c) {
    return static_cast<long long>(b.u - a.u) * (c.v - a.v) - static_cast<long long>(b.v - a.v) * (c.u - a.u) == 0;
  });
  if (collinear) {
    fail(ErrorCode::DegenerateMask, "mask pixels are collinear");
  }

  // Hull over cell corners, so a filled convex region scores 1.
  using P = std::pair<long long, long long>;
  std::vector<P> pts;
  pts.reserve(pixels.size() * 4);
  for (auto p : pixels) {
    for (int du = 0; du <= 1; ++du) {
      for (int dv = 0; dv <= 1; ++dv) {
        pts.emplace_back(p.u + du, p.v + dv);
      }
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const auto cross = [](const P &o, const P &p, const P &q) {
    return (p.first - o.first) * (q.second - o.second) - (p.second - o.second) * (q.first - o.first);
  };
  std::vector<P> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto &p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) {
      --k;
    }
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  long long twice_area = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto &p = hull[i];
    const auto &q = hull[(i + 1) % hull.size()];
    twice_area += p.first * q.second - q.first * p.second;
  }
  return static_cast<double>(pixels.size()) / (0.5 * static_cast<double>(std::llabs(twice_area)));
}

std::vector<double> class_distribution(const std::vector<double> &scores, double temperature) {
  if (scores.empty() || !all_finite(scores) || !(temperature > 0)) {
    fail(ErrorCode::NonFiniteScore, "scores must be non-empty and finite");
  }
  const double tau = 1.0 / temperature;
  const double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < scores.size(); ++j) {
    p[j] = std::exp(tau * (scores[j] - m));
    sum += p[j];
  }
  for (auto &x : p) {
    x /= sum;
  }
  return p;
}

double energy_score(const std::vector<double> &scores, double temperature) {
  if (scores.empty() || !all_finite(scores) || !(temperature > 0)) {
    fail(ErrorCode::NonFiniteScore, "scores must be non-empty and finite");
  }
  const double tau = 1.0 / temperature;
  const double m = *std::max_element(scores.begin(), scores.end());
  double sum = 0.0;
  for (double s : scores) {
    sum += std::exp(tau * (s - m));
  }
  return -(m + std::log(sum) / tau);
}

std::vector<double> reweight_degradation(const std::vector<double> &p, const std::vector<double> &eta, double beta) {
  if (p.size() != eta.size() || p.empty()) {
    fail(ErrorCode::InvalidFormat, "probability and degradation vectors differ in length");
  }
  if (!all_finite(p) || !all_finite(eta)) {
    fail(ErrorCode::NonFiniteScore, "non-finite probability or degradation");
  }
  // Factor out the smallest degradation; the common factor cancels and this
  // keeps large-but-equal eta from underflowing.
  const double eta_min = *std::min_element(eta.begin(), eta.end());
  std::vector<double> out(p.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (eta[j] < 0) {
      fail(ErrorCode::InvalidFormat, "degradation must be non-negative");
    }
    out[j] = p[j] * std::exp(-beta * (eta[j] - eta_min));
    sum += out[j];
  }
  if (!(sum > std::numeric_limits<double>::min())) {
    fail(ErrorCode::AllMassDegraded, "all label mass degraded away");
  }
  if (std::all_of(eta.begin(), eta.end(), [&](double e) { return e == eta_min; })) {
    return p; // every factor is exactly 1
  }
  for (auto &x : out) {
    x /= sum;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Geometry

Pixel mask_centroid(const std::vector<Pixel> &pixels) {
  if (pixels.empty()) {
    fail(ErrorCode::DegenerateMask, "empty mask");
  }
  double su = 0, sv = 0;
  for (auto p : pixels) {
    su += p.u;
    sv += p.v;
  }
  const double n = static_cast<double>(pixels.size());
  return {static_cast<int>(std::lround(su / n)), static_cast<int>(std::lround(sv / n))};
}

double centroid_depth(const std::vector<Pixel> &pixels, const DepthImage &depth, int radius,
                      const MonocularDepthSource *mono) {
  if (radius < 1) {
    fail(ErrorCode::InvalidFormat, "neighbourhood radius must be >= 1");
  }
  const Pixel c = mask_centroid(pixels);
  std::vector<double> valid;
  for (int v = std::max(0, c.v - radius); v <= std::min(depth.height - 1, c.v + radius); ++v) {
    for (int u = std::max(0, c.u - radius); u <= std::min(depth.width - 1, c.u + radius); ++u) {
      const double d = depth.at(u, v);
      if (std::isfinite(d) && d > 0) {
        valid.push_back(d);
      }
    }
  }
  if (!valid.empty()) {
    return median(std::move(valid));
  }
  if (mono != nullptr) {
    std::vector<double> predicted;
    for (double d : mono->predict(pixels)) {
      if (std::isfinite(d) && d > 0) {
        predicted.push_back(d);
      }
    }
    if (!predicted.empty()) {
      return median(std::move(predicted));
    }
  }
  fail(ErrorCode::NoDepthAvailable, "no valid sensor or monocular depth for mask");
}

Eigen::Vector3d back_project(double u, double v, double z, const CameraIntrinsics &k) {
  if (!(z > 0) || !std::isfinite(z)) {
    fail(ErrorCode::NonPositiveDepth, "depth must be positive");
  }
  return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

Eigen::Vector2d project(const Eigen::Vector3d &p, const CameraIntrinsics &k) {
  if (!(p.z() > 0)) {
    fail(ErrorCode::NonPositiveDepth, "point is behind the camera");
  }
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

RigidTransform default_camera_mount(double height) {
  RigidTransform t;
  // base x = cam z, base y = -cam x, base z = -cam y
  t.rotation << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  t.translation = {0, 0, height};
  return t;
}

Eigen::Vector3d to_base_frame(const Eigen::Vector3d &point_cam, const RigidTransform &extrinsics) {
  const Eigen::Matrix3d &r = extrinsics.rotation;
  if (!r.allFinite() || (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(r.determinant() - 1.0) > 1e-6) {
    fail(ErrorCode::InvalidTransform, "camera rotation is not orthonormal");
  }
  return r * point_cam + extrinsics.translation;
}

// ---------------------------------------------------------------------------
// Tracking

Matrix6d transition_matrix(double dt) {
  Matrix6d f = Matrix6d::Identity();
  f.topRightCorner<3, 3>() = dt * Eigen::Matrix3d::Identity();
  return f;
}

Matrix6d process_noise(double dt, double q_c) {
  Matrix6d q = Matrix6d::Zero();
  const Eigen::Matrix3d i3 = Eigen::Matrix3d::Identity();
  q.topLeftCorner<3, 3>() = q_c * dt * dt * dt / 3.0 * i3;
  q.topRightCorner<3, 3>() = q_c * dt * dt / 2.0 * i3;
  q.bottomLeftCorner<3, 3>() = q_c * dt * dt / 2.0 * i3;
  q.bottomRightCorner<3, 3>() = q_c * dt * i3;
  return q;
}

TrackedObject new_track(int track_id, std::string label, const Eigen::Vector3d &measurement, double timestamp,
                        const KalmanParams &params) {
  TrackedObject t;
  t.track_id = track_id;
  t.label = std::move(label);
  t.state.head<3>() = measurement;
  t.covariance = Matrix6d::Zero();
  t.covariance.topLeftCorner<3, 3>() = params.sigma * params.sigma * Eigen::Matrix3d::Identity();
  t.covariance.bottomRightCorner<3, 3>() = params.initial_velocity_var * Eigen::Matrix3d::Identity();
  t.last_seen = timestamp;
  return t;
}

namespace {

void check_finite(const TrackedObject &t) {
  if (!t.state.allFinite() || !t.covariance.allFinite()) {
    fail(ErrorCode::NumericalDivergence, "track " + std::to_string(t.track_id) + " diverged");
  }
}

} // namespace

TrackedObject track_predict(const TrackedObject &track, double dt, const KalmanParams &params) {
  if (!(dt >= 0)) {
    fail(ErrorCode::InvalidFormat, "dt must be non-negative");
  }
  TrackedObject out = track;
  const Matrix6d f = transition_matrix(dt);
  out.state = f * track.state;
  out.covariance = f * track.covariance * f.transpose() + process_noise(dt, params.q_c);
  check_finite(out);
  return out;
}

TrackedObject track_update(const TrackedObject &track, const Eigen::Vector3d &measurement, double dt,
                           const KalmanParams &params) {
  TrackedObject out = track_predict(track, dt, params);
  Eigen::Matrix<double, 3, 6> h = Eigen::Matrix<double, 3, 6>::Zero();
  h.leftCols<3>() = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d r = params.sigma * params.sigma * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d s = h * out.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 6, 3> k = out.covariance * h.transpose() * s.inverse();
  out.state += k * (measurement - h * out.state);
  // Joseph form keeps P symmetric positive semi-definite.
  const Matrix6d a = Matrix6d::Identity() - k * h;
  out.covariance = a * out.covariance * a.transpose() + k * r * k.transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  check_finite(out);
  return out;
}

int TrackRegistry::observe(const std::string &label, const Eigen::Vector3d &world_point, double p_prime,
                           double timestamp) {
  int best = 0;
  double best_d = gate_m_;
  for (const auto &[id, t] : tracks_) {
    if (t.label != label) {
      continue;
    }
    const double dt = std::max(0.0, timestamp - t.last_seen);
    const double d = (track_predict(t, dt, params_).position() - world_point).norm();
    if (d <= best_d) {
      best_d = d;
      best = id;
    }
  }
  if (best == 0) {
    best = next_id_++;
    tracks_[best] = new_track(best, label, world_point, timestamp, params_);
  } else {
    auto &t = tracks_[best];
    const double dt = std::max(0.0, timestamp - t.last_seen);
    try {
      t = track_update(t, world_point, dt, params_);
    } catch (const Error &) {
      tracks_.erase(best);
      throw;
    }
    t.last_seen = timestamp;
  }
  tracks_[best].last_p_prime = p_prime;
  return best;
}

void TrackRegistry::prune(double now, double max_age) {
  std::erase_if(tracks_, [&](const auto &kv) { return now - kv.second.last_seen > max_age; });
}

const TrackedObject *TrackRegistry::find(int track_id) const {
  const auto it = tracks_.find(track_id);
  return it == tracks_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// Frames

std::string encode_rle(const std::vector<Pixel> &pixels, int width, int height) {
  std::vector<char> on(static_cast<std::size_t>(width) * height, 0);
  for (auto p : pixels) {
    if (p.u >= 0 && p.u < width && p.v >= 0 && p.v < height) {
      on[static_cast<std::size_t>(p.v) * width + p.u] = 1;
    }
  }
  std::ostringstream out;
  char current = 0;
  std::size_t run = 0;
  bool first = true;
  for (char c : on) {
    if (c != current) {
      out << (first ? "" : " ") << run;
      first = false;
      current = c;
      run = 0;
    }
    ++run;
  }
  out << (first ? "" : " ") << run;
  return out.str();
}

std::vector<Pixel> decode_rle(std::string_view counts, int width, int height) {
  std::istringstream in{std::string(counts)};
  std::vector<Pixel> out;
  std::size_t pos = 0;
  const std::size_t total = static_cast<std::size_t>(width) * height;
  bool fg = false;
  long long run = 0;
  while (in >> run) {
    if (run < 0 || pos + static_cast<std::size_t>(run) > total) {
      fail(ErrorCode::InvalidFormat, "RLE runs exceed the image");
    }
    if (fg) {
      for (std::size_t i = pos; i < pos + static_cast<std::size_t>(run); ++i) {
        out.push_back({static_cast<int>(i % width), static_cast<int>(i / width)});
      }
    }
    pos += static_cast<std::size_t>(run);
    fg = !fg;
  }
  if (!in.eof()) {
    fail(ErrorCode::InvalidFormat, "RLE counts must be integers");
  }
  return out;
}

json frame_to_json(const PerceptionFrame &frame) {
  json masks = json::array();
  for (const auto &m : frame.masks) {
    masks.push_back({{"id", m.id},
                     {"pixels_rle", encode_rle(m.pixels, frame.intrinsics.width, frame.intrinsics.height)},
                     {"labels", m.labels},
                     {"scores", m.scores},
                     {"eta", m.eta},
                     {"source_confidence", m.source_confidence}});
  }
  const auto *bytes = reinterpret_cast<const unsigned char *>(frame.depth.data.data());
  return {{"intrinsics", frame.intrinsics.to_json()},
          {"masks", std::move(masks)},
          {"depth", {{"encoding", "f32le"}, {"data_b64", base64_encode(bytes, frame.depth.data.size() * sizeof(float))}}}};
}

PerceptionFrame frame_from_json(const json &j) {
  PerceptionFrame f;
  try {
    f.intrinsics = CameraIntrinsics::from_json(j.at("intrinsics"));
    const int w = f.intrinsics.width;
    const int h = f.intrinsics.height;
    for (const auto &m : j.at("masks")) {
      MaskCandidate c;
      c.id = m.at("id").get<int>();
      c.pixels = decode_rle(m.at("pixels_rle").get<std::string>(), w, h);
      c.labels = m.at("labels").get<std::vector<std::string>>();
      c.scores = m.at("scores").get<std::vector<double>>();
      c.eta = m.contains("eta") ? m.at("eta").get<std::vector<double>>() : std::vector<double>(c.labels.size(), 0.0);
      c.source_confidence = m.value("source_confidence", 1.0);
      if (c.scores.size() != c.labels.size() || c.eta.size() != c.labels.size()) {
        fail(ErrorCode::InvalidFormat, "mask " + std::to_string(c.id) + ": labels, scores and eta differ in length");
      }
      f.masks.push_back(std::move(c));
    }
    f.depth.width = w;
    f.depth.height = h;
    if (j.contains("depth")) {
      const auto &d = j.at("depth");
      if (d.value("encoding", "") != "f32le") {
        fail(ErrorCode::InvalidFormat, "unsupported depth encoding");
      }
      const auto bytes = base64_decode(d.at("data_b64").get<std::string>());
      if (bytes.size() != static_cast<std::size_t>(w) * h * sizeof(float)) {
        fail(ErrorCode::InvalidFormat, "depth size does not match intrinsics");
      }
      f.depth.data.resize(static_cast<std::size_t>(w) * h);
      std::memcpy(f.depth.data.data(), bytes.data(), bytes.size());
    } else {
      f.depth.data.assign(static_cast<std::size_t>(w) * h, std::numeric_limits<float>::quiet_NaN());
    }
  } catch (const json::exception &e) {
    fail(ErrorCode::InvalidFormat, std::string("bad perception frame: ") + e.what());
  }
  return f;
}

FixtureFrameSource::FixtureFrameSource(std::vector<PerceptionFrame> frames) : frames_(std::move(frames)) {
  if (frames_.empty()) {
    fail(ErrorCode::PreconditionFailed, "fixture source needs at least one frame");
  }
}

FixtureFrameSource FixtureFrameSource::load(const std::vector<std::filesystem::path> &files) {
  std::vector<PerceptionFrame> frames;
  for (const auto &file : files) {
    std::ifstream in(file);
    const json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) {
      fail(ErrorCode::InvalidFormat, "bad frame file " + file.string());
    }
    frames.push_back(frame_from_json(j));
  }
  return FixtureFrameSource(std::move(frames));
}

PerceptionFrame FixtureFrameSource::next_frame() {
  const auto &f = frames_[std::min(cursor_, frames_.size() - 1)];
  ++cursor_;
  return f;
}

// ---------------------------------------------------------------------------
// Pipeline

std::size_t GroundedCandidate::best_label() const {
  return static_cast<std::size_t>(std::max_element(p_prime.begin(), p_prime.end()) - p_prime.begin());
}

PipelineResult run_pipeline(const PerceptionFrame &frame, const PerceptionConfig &config,
                            const RigidTransform &camera_to_base, const MonocularDepthSource *mono) {
  std::vector<const MaskCandidate *> order;
  for (const auto &m : frame.masks) {
    order.push_back(&m);
  }
  std::stable_sort(order.begin(), order.end(), [](auto *a, auto *b) { return a->id < b->id; });

  PipelineResult result;
  for (const auto *m : order) {
    const auto reject = [&](const char *why) { result.rejected.push_back({m->id, why}); };
    if (m->source_confidence < config.source_confidence_floor) {
      reject("source_confidence");
      continue;
    }
    GroundedCandidate g;
    g.mask_id = m->id;
    g.labels = m->labels;
    try {
      g.quality = mask_quality(m->pixels);
    } catch (const Error &) {
      reject("degenerate");
      continue;
    }
    if (g.quality < config.q_thresh) {
      reject("quality");
      continue;
    }
    try {
      g.energy = energy_score(m->scores, config.temperature);
      g.p = class_distribution(m->scores, config.temperature);
    } catch (const Error &) {
      reject("nonfinite");
      continue;
    }
    if (g.energy > config.e_thresh) {
      reject("energy");
      continue;
    }
    try {
      g.p_prime = reweight_degradation(g.p, m->eta, config.beta);
    } catch (const Error &e) {
      reject(e.code() == ErrorCode::AllMassDegraded ? "degraded" : "nonfinite");
      continue;
    }
    try {
      g.centroid = mask_centroid(m->pixels);
      g.depth = centroid_depth(m->pixels, frame.depth, config.neighborhood_radius, mono);
      g.point_cam = back_project(g.centroid.u, g.centroid.v, g.depth, frame.intrinsics);
      g.point_base = to_base_frame(g.point_cam, camera_to_base);
    } catch (const Error &e) {
      if (e.code() == ErrorCode::InvalidTransform) {
        throw;
      }
      reject("no_depth");
      continue;
    }
    result.survivors.push_back(std::move(g));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Target selection

SynonymTable SynonymTable::load(const std::filesystem::path &file) {
  std::ifstream in(file);
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    fail(ErrorCode::InvalidFormat, "bad synonym table " + file.string());
  }
  SynonymTable t;
  if (j.contains("synonyms")) {
    for (const auto &[lang, labels] : j.at("synonyms").items()) {
      for (const auto &[label, words] : labels.items()) {
        for (const auto &w : words) {
          t.add_synonym(lang, label, w.get<std::string>());
        }
      }
    }
  }
  if (j.contains("affinity")) {
    for (const auto &[a, row] : j.at("affinity").items()) {
      for (const auto &[b, v] : row.items()) {
        t.set_affinity(a, b, v.get<double>());
      }
    }
  }
  return t;
}

void SynonymTable::add_synonym(const std::string &language, const std::string &label, const std::string &word) {
  synonyms_[language][label].push_back(text::to_lower(word));
}

void SynonymTable::set_affinity(const std::string &a, const std::string &b, double value) {
  affinity_[{a, b}] = value;
  affinity_[{b, a}] = value;
}

double SynonymTable::affinity(const std::string &a, const std::string &b) const {
  if (a == b) {
    return 1.0;
  }
  const auto it = affinity_.find({a, b});
  return it == affinity_.end() ? 0.0 : it->second;
}

std::vector<std::string> SynonymTable::words_for(const std::string &label, std::string_view language) const {
  std::vector<std::string> out{text::to_lower(label)};
  for (std::string_view lang : {language, std::string_view("en")}) {
    const auto li = synonyms_.find(std::string(lang));
    if (li == synonyms_.end()) {
      continue;
    }
    if (const auto wi = li->second.find(label); wi != li->second.end()) {
      out.insert(out.end(), wi->second.begin(), wi->second.end());
    }
    if (lang == "en") {
      break;
    }
  }
  return out;
}

std::vector<std::string> SynonymTable::labels() const {
  std::set<std::string> all;
  for (const auto &[lang, labels] : synonyms_) {
    for (const auto &[label, words] : labels) {
      all.insert(label);
    }
  }
  return {all.begin(), all.end()};
}

namespace {

std::vector<std::u32string> word_tokens(std::string_view s) {
  const std::u32string cps = text::decode(text::to_lower(s));
  std::vector<std::u32string> out;
  std::u32string cur;
  for (char32_t cp : cps) {
    if (text::is_unsegmented(cp)) {
      if (!cur.empty()) {
        out.push_back(std::move(cur));
        cur.clear();
      }
      out.emplace_back(1, cp);
    } else if (text::is_letter(cp) || text::is_digit(cp) || cp == U'\'') {
      cur.push_back(cp);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) {
    out.push_back(std::move(cur));
  }
  return out;
}

bool token_matches(const std::u32string &have, const std::u32string &want) {
  return have == want || have == want + U"s" || have == want + U"es";
}

bool contains_run(const std::vector<std::u32string> &hay, const std::vector<std::u32string> &needle) {
  if (needle.empty() || needle.size() > hay.size()) {
    return false;
  }
  for (std::size_t i = 0; i + needle.size() <= hay.size(); ++i) {
    bool ok = true;
    for (std::size_t k = 0; k < needle.size() && ok; ++k) {
      ok = token_matches(hay[i + k], needle[k]);
    }
    if (ok) {
      return true;
    }
  }
  return false;
}

} // namespace

double lexical_similarity(const std::string &label, std::string_view command, const SynonymTable *synonyms,
                          std::string_view language) {
  const auto cmd = word_tokens(command);
  if (synonyms != nullptr) {
    for (const auto &w : synonyms->words_for(label, language)) {
      if (contains_run(cmd, word_tokens(w))) {
        return 1.0;
      }
    }
  }
  const auto words = word_tokens(label);
  if (words.empty()) {
    return 0.0;
  }
  std::size_t hit = 0;
  for (const auto &w : words) {
    hit += contains_run(cmd, {w}) ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(words.size());
}

double alignment_score(double p_prime, double similarity, const PerceptionConfig &config) {
  return config.lambda1 * std::log(p_prime) + config.lambda2 * similarity;
}

TargetChoice select_target(const std::vector<TargetCandidate> &candidates, std::string_view command,
                           const PerceptionConfig &config, const SimilarityFn &similarity) {
  if (candidates.empty()) {
    fail(ErrorCode::NoCandidates, "no localizable candidates");
  }
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return candidates[a].track_id < candidates[b].track_id; });
  std::optional<TargetChoice> best;
  for (std::size_t i : order) {
    const auto &c = candidates[i];
    for (std::size_t j = 0; j < c.labels.size() && j < c.p_prime.size(); ++j) {
      const double s = alignment_score(c.p_prime[j], similarity(c.labels[j], command), config);
      if (!best || s > best->score) {
        best = TargetChoice{i, j, c.track_id, s};
      }
    }
  }
  if (!best) {
    fail(ErrorCode::NoCandidates, "candidates carry no labels");
  }
  return *best;
}

} // namespace babelbot::perception
