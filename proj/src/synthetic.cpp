#include "elab/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "elab/error.hpp"
#include "elab/random.hpp"

namespace elab {

void SyntheticConfig::validate() const {
  auto fail = [](const char* what) { throw ValidationError(std::string("synthetic config: ") + what); };
  if (n_students < 4) fail("n_students must be at least 4");
  if (weeks < 1) fail("weeks must be positive");
  if (n_videos_per_week < 1) fail("n_videos_per_week must be positive");
  if (n_quizzes_per_week < 0) fail("n_quizzes_per_week must be non-negative");
  if (!(pass_rate > 0.0 && pass_rate < 1.0)) fail("pass_rate must lie in (0, 1)");
  if (!(engagement_decay_fail > 0.0 && engagement_decay_fail <= 1.0))
    fail("engagement_decay_fail must lie in (0, 1]");
  if (!(quiz_accuracy_pass >= 0.0 && quiz_accuracy_pass <= 1.0)) fail("quiz_accuracy_pass must lie in [0, 1]");
  if (!(quiz_accuracy_fail >= 0.0 && quiz_accuracy_fail <= 1.0)) fail("quiz_accuracy_fail must lie in [0, 1]");
  if (proactivity_shift_pass < 0) fail("proactivity_shift_pass must be non-negative");
  if (seconds_per_week < 7 * 86400) fail("seconds_per_week must cover at least seven days");
}

namespace {

constexpr std::int64_t kDay = 86400;
constexpr std::array<double, 4> kSpeeds{0.75, 1.25, 1.5, 2.0};

class StudentWriter {
 public:
  StudentWriter(std::string student_id, std::mt19937_64& rng, std::vector<Interaction>& out)
      : id_(std::move(student_id)), rng_(rng), out_(out) {}

  std::int64_t now() const { return t_; }
  bool started() const { return started_; }
  void jump_to(std::int64_t t) { t_ = std::max(t_, t); }

  std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  void video_visit(const LearningObject& video) {
    const double duration = *video.duration_sec;
    const double fraction = std::uniform_real_distribution<double>(0.5, 1.0)(rng_);
    double remaining = std::floor(fraction * duration);
    double position = 0.0;

    emit(Action::VideoLoad, video.object_id).position = 0.0;
    t_ += uniform(5, 30);
    emit(Action::VideoPlay, video.object_id).position = 0.0;

    if (chance(0.3)) {
      const double part = std::floor(remaining * std::uniform_real_distribution<double>(0.2, 0.8)(rng_));
      watch(part, position, remaining);
      emit(Action::VideoPause, video.object_id).position = position;
      t_ += uniform(10, 120);
      emit(Action::VideoPlay, video.object_id).position = position;
    }
    if (chance(0.2)) {
      watch(std::floor(remaining / 3), position, remaining);
      emit(Action::VideoPause, video.object_id).position = position;
      t_ += uniform(3, 10);
      emit(Action::VideoSpeedChange, video.object_id).speed =
          kSpeeds[static_cast<std::size_t>(uniform(0, kSpeeds.size() - 1))];
      t_ += uniform(1, 5);
      emit(Action::VideoPlay, video.object_id).position = position;
    }
    if (chance(0.2)) {
      watch(std::floor(remaining / 2), position, remaining);
      auto& seek = emit(Action::VideoSeek, video.object_id);
      seek.seek_from = position;
      position = std::max(0.0, position + static_cast<double>(uniform(-60, 120)));
      seek.seek_to = position;
    }
    watch(remaining, position, remaining);
    emit(chance(0.5) ? Action::VideoStop : Action::VideoPause, video.object_id).position = position;
    t_ += uniform(5, 60);
  }

  void quiz_visit(const LearningObject& quiz, double accuracy) {
    for (int attempt = 0; attempt < 3; ++attempt) {
      t_ += uniform(30, 300);
      const bool correct = chance(accuracy);
      emit(Action::QuizSubmit, quiz.object_id).correct = correct;
      if (correct) break;
    }
    t_ += uniform(5, 60);
  }

 private:
  Interaction& emit(Action a, const std::string& object_id) {
    Interaction ev;
    ev.student_id = id_;
    ev.timestamp = t_;
    ev.action = a;
    ev.object_id = object_id;
    out_.push_back(std::move(ev));
    started_ = true;
    return out_.back();
  }

  void watch(double seconds, double& position, double& remaining) {
    t_ += static_cast<std::int64_t>(seconds);
    position += seconds;
    remaining -= seconds;
  }

  std::string id_;
  std::mt19937_64& rng_;
  std::vector<Interaction>& out_;
  std::int64_t t_ = 0;
  bool started_ = false;
};

CourseSchedule build_schedule(const SyntheticConfig& c, std::mt19937_64& rng) {
  CourseSchedule s;
  s.course_id = c.course_id;
  s.weeks = c.weeks;
  s.seconds_per_week = c.seconds_per_week;
  s.metadata = c.metadata;
  std::uniform_int_distribution<int> duration(300, 900);
  for (int w = 0; w < c.weeks; ++w) {
    for (int v = 0; v < c.n_videos_per_week; ++v)
      s.objects.push_back({fmt::format("v{:02d}_{:02d}", w, v), ObjectKind::Video, w,
                           static_cast<double>(duration(rng))});
    for (int q = 0; q < c.n_quizzes_per_week; ++q)
      s.objects.push_back({fmt::format("q{:02d}_{:02d}", w, q), ObjectKind::Quiz, w, std::nullopt});
  }
  return s;
}

}  // namespace

SyntheticCourse generate_synthetic_course(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(mix64(config.seed));

  SyntheticCourse course;
  course.schedule = build_schedule(config, rng);

  const int n = config.n_students;
  const auto n_pass = static_cast<int>(std::llround(n * config.pass_rate));
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> passing(static_cast<std::size_t>(n), false);
  for (int i = 0; i < n_pass; ++i) passing[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;

  const int width = std::max(4, static_cast<int>(std::to_string(n - 1).size()));
  for (int s = 0; s < n; ++s) {
    const std::string id = fmt::format("s{:0{}d}", s, width);
    const bool pass = passing[static_cast<std::size_t>(s)];
    course.labels.push_back({id, pass});

    std::mt19937_64 srng(substream_seed(config.seed, id));
    std::vector<std::vector<const LearningObject*>> by_week(static_cast<std::size_t>(config.weeks));
    for (const auto& o : course.schedule.objects) {
      const int week = pass ? std::max(0, o.scheduled_week - config.proactivity_shift_pass) : o.scheduled_week;
      const double p = kBaseVisitProbability * (pass ? 1.0 : std::pow(config.engagement_decay_fail, week));
      if (std::bernoulli_distribution(p)(srng)) by_week[static_cast<std::size_t>(week)].push_back(&o);
    }
    if (std::all_of(by_week.begin(), by_week.end(), [](const auto& v) { return v.empty(); }))
      by_week.front().push_back(&course.schedule.objects.front());

    StudentWriter writer(id, srng, course.events);
    for (int w = 0; w < config.weeks; ++w) {
      const auto& visits = by_week[static_cast<std::size_t>(w)];
      if (visits.empty()) continue;
      const auto n_sessions = static_cast<std::size_t>(
          std::min<std::int64_t>(static_cast<std::int64_t>(visits.size()), writer.uniform(1, 3)));
      std::array<int, 7> days{0, 1, 2, 3, 4, 5, 6};
      std::shuffle(days.begin(), days.end(), srng);
      std::sort(days.begin(), days.begin() + static_cast<std::ptrdiff_t>(n_sessions));

      const std::int64_t week_start = static_cast<std::int64_t>(w) * config.seconds_per_week;
      for (std::size_t k = 0; k < n_sessions; ++k) {
        const std::int64_t planned = week_start + days[k] * kDay + writer.uniform(8, 20) * 3600 +
                                     writer.uniform(0, 59) * 60;
        // sessions must stay separated by more than the default gap threshold
        const std::int64_t earliest = writer.started() ? writer.now() + 2 * kDefaultSessionGap : 0;
        writer.jump_to(std::max(planned, earliest));
        const std::size_t begin = visits.size() * k / n_sessions;
        const std::size_t end = visits.size() * (k + 1) / n_sessions;
        for (std::size_t v = begin; v < end; ++v) {
          const LearningObject& obj = *visits[v];
          if (obj.kind == ObjectKind::Video)
            writer.video_visit(obj);
          else
            writer.quiz_visit(obj, pass ? config.quiz_accuracy_pass : config.quiz_accuracy_fail);
        }
      }
    }
  }
  return course;
}

}  // namespace elab
