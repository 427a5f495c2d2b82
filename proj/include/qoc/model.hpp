#pragma once

// Content-quality model: detection accuracy as a function of encoder QP,
// QP as a function of video data rate, and the weighted content objective
// built from the two.

#include <cstddef>
#include <span>
#include <vector>

namespace qoc {

inline constexpr double kQpMin = 0.0;
inline constexpr double kQpMax = 51.0;

/// Data rates throughout the model are in kilobits per second.
inline constexpr double kBitsPerRateUnit = 1000.0;

/// HEVC quantization parameter, always inside [kQpMin, kQpMax].
class QpValue {
 public:
  QpValue() = default;
  /// Clamps into range. Throws DomainError on NaN/inf.
  explicit QpValue(double value);

  double value() const noexcept { return value_; }
  friend bool operator==(const QpValue&, const QpValue&) = default;

 private:
  double value_ = 0.0;
};

/// Accuracy curve P(Q) = alpha * Q^beta + gamma for one object category.
struct CategoryAccuracyModel {
  double alpha = 0.0;
  double beta = 1.0;
  double gamma = 1.0;

  friend bool operator==(const CategoryAccuracyModel&, const CategoryAccuracyModel&) = default;
};

/// QP-vs-rate curve Q(R) = a * exp(b * R) plus the per-category object
/// densities (objects per frame) of one vehicle's video.
struct VideoRateModel {
  double a = 0.0;
  double b = 0.0;
  std::vector<double> densities;

  friend bool operator==(const VideoRateModel&, const VideoRateModel&) = default;
};

struct ContentScenario {
  std::vector<CategoryAccuracyModel> categories;  // N
  std::vector<VideoRateModel> videos;             // M
  std::vector<double> weights;                    // N, category weights

  std::size_t num_categories() const noexcept { return categories.size(); }
  std::size_t num_videos() const noexcept { return videos.size(); }

  friend bool operator==(const ContentScenario&, const ContentScenario&) = default;
};

// Invariant checks; each throws DomainError describing the first violation.
void validate(const CategoryAccuracyModel& model);
void validate(const VideoRateModel& model, std::size_t num_categories);
void validate(const ContentScenario& scenario);

/// Unclamped alpha*qp^beta + gamma.
double accuracy_curve(const CategoryAccuracyModel& model, double qp);

/// Accuracy curve clamped to [0, 1].
double accuracy_from_qp(const CategoryAccuracyModel& model, QpValue qp);

/// d accuracy / d qp of the clamped curve (zero where the clamp is active).
double accuracy_slope(const CategoryAccuracyModel& model, double qp);

/// a*exp(b*rate) clamped into the QP range. Negative rate is a DomainError.
QpValue qp_from_rate(const VideoRateModel& model, double rate_kbps);

/// Unclamped a*exp(b*rate).
double qp_curve(const VideoRateModel& model, double rate_kbps);

/// Inverse of the QP curve. qp >= a maps to rate 0; qp <= 0 is a DomainError.
double rate_from_qp(const VideoRateModel& model, double qp);

/// Largest QP whose accuracy still reaches p_min, clamped to kQpMax.
/// Throws InfeasibleAccuracyError when p_min >= gamma.
QpValue max_qp_for_accuracy(const CategoryAccuracyModel& model, double p_min);

/// Accuracy of category `n` for video `m` when sent at `rate_kbps`.
double accuracy_at_rate(const ContentScenario& scenario, std::size_t m, std::size_t n,
                        double rate_kbps);

/// Sum over categories of weight * density * accuracy for one video, and its
/// derivative with respect to rate.
struct VideoUtility {
  double value = 0.0;
  double slope = 0.0;  // per kbps
};
VideoUtility video_content_quality(const ContentScenario& scenario, std::size_t m,
                                   double rate_kbps);

/// (1/M) * sum_m sum_n weight_n * density_{m,n} * P_n(Q_m(rate_m)).
double qoc_objective(const ContentScenario& scenario, std::span<const double> rates_kbps);

/// Same sum with every accuracy replaced by gamma_n (the rate -> infinity limit).
double qoc_upper_bound(const ContentScenario& scenario);

/// Parameters of the measurement tables shipped with the project: three
/// categories (person, car, traffic light) and three Caltech clips.
ContentScenario default_content_scenario();

}  // namespace qoc
