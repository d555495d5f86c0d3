#include "elab/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <fmt/format.h>

#include "elab/error.hpp"

namespace elab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::int64_t kDay = 86400;

// Column positions; must follow kSpecs below.
enum Col : std::size_t {
  CheckCheckCheckQuiz,
  CorrectTimeQuiz,
  DistinctProbsQuiz,
  NumSubmitQuiz,
  TotalTimeVid,
  ActiveParticipationWeeklyVid,
  AttendanceRate,
  HourlyFreqRegular,
  WatchRatioVid,
  StdTimeSession,
  EagerViewVid,
  TimelyViewVid,
  EagerViewQuiz,
  RatioClicksWeekend,
  StdCorrectTimeQuiz,
  AvgLenSeekVid,
  FreqPauseVid,
  FreqPlayVid,
  PlayStopPlayVid,
  PlayPauseLoadVid,
  PauseSpeedchangePlayVid,
  SpeedVid,
};

constexpr std::array<FeatureSpec, kFeatureCount> kSpecs{{
    {"check-check-check-quiz", Dimension::Effort,
     "windows of three consecutive quiz submissions inside one session", false},
    {"correct-time-quiz", Dimension::Effort, "active quiz time / correct submissions", true},
    {"distinct-probs-quiz", Dimension::Effort, "distinct quizzes submitted", false},
    {"num-submit-quiz", Dimension::Effort, "submissions / distinct quizzes submitted", true},
    {"total-time-vid", Dimension::Effort, "cumulative active video time up to this week", false},
    {"active-participation-weekly-vid", Dimension::Regularity,
     "videos watched fully / videos loaded this week", true},
    {"attendance-rate", Dimension::Regularity,
     "released videos played so far / videos released so far", true},
    {"hourly-freq-regular", Dimension::Regularity,
     "mean pairwise cosine similarity of daily hour-of-day histograms", false},
    {"watch-ratio-vid", Dimension::Regularity, "mean watched time / duration over opened videos", true},
    {"std-time-session", Dimension::Regularity, "standard deviation of session durations", true},
    {"eager-view-vid", Dimension::Proactivity,
     "mean (scheduled week - first view week) / W over videos first viewed on or before schedule", true},
    {"timely-view-vid", Dimension::Proactivity,
     "fraction of this week's videos first viewed in this week", true},
    {"eager-view-quiz", Dimension::Proactivity, "quiz analogue of eager-view-vid", true},
    {"ratio-clicks-weekend", Dimension::Proactivity, "weekend clicks / weekday clicks", true},
    {"std-correct-time-quiz", Dimension::Proactivity,
     "standard deviation over quizzes of quiz time / correct submissions", true},
    {"avg-len-seek-vid", Dimension::Control, "mean |seek_to - seek_from| in seconds", true},
    {"freq-pause-vid", Dimension::Control, "pauses per hour of active video time", true},
    {"freq-play-vid", Dimension::Control, "plays per hour of session time", true},
    {"play-stop-play-vid", Dimension::Control, "Play, Stop, Play trigrams inside one session", false},
    {"play-pause-load-vid", Dimension::Control, "Play, Pause, Load trigrams inside one session", false},
    {"pause-speedchange-play-vid", Dimension::Control,
     "Pause, SpeedChange, Play trigrams inside one session", false},
    {"speed-vid", Dimension::Control, "mean playback speed; 1.0 when video activity has no speed change",
     true},
}};

double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return kNaN;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double mean_pairwise_cosine(const std::vector<std::array<double, 24>>& hists) {
  if (hists.size() < 2) return 0.0;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < hists.size(); ++a) {
    for (std::size_t b = a + 1; b < hists.size(); ++b) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t h = 0; h < 24; ++h) {
        dot += hists[a][h] * hists[b][h];
        na += hists[a][h] * hists[a][h];
        nb += hists[b][h] * hists[b][h];
      }
      total += dot / std::sqrt(na * nb);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

bool is_trigram(const Interaction& a, const Interaction& b, const Interaction& c, Action x, Action y,
                Action z) {
  return a.action == x && b.action == y && c.action == z;
}

// Per-week accumulators for one student.
struct WeekAcc {
  double quiz_time = 0, video_time = 0;
  int submissions = 0, correct = 0;
  std::map<std::string, double> quiz_time_by_obj;
  std::map<std::string, int> quiz_correct_by_obj;
  std::set<std::string> quizzes_submitted;
  std::map<std::string, double> watched;  // video -> watched seconds in this week
  std::set<std::string> loaded, opened;
  std::map<std::int64_t, std::array<double, 24>> hours_by_day;
  int weekend_clicks = 0, weekday_clicks = 0;
  std::vector<double> seek_lengths, speeds;
  int pauses = 0, video_events = 0;
  std::vector<double> session_durations;
  int session_plays = 0;
  double session_time = 0;
  int ccc = 0, psp = 0, ppl = 0, psc = 0;
};

}  // namespace

std::string_view dimension_name(Dimension d) {
  switch (d) {
    case Dimension::Effort: return "Effort";
    case Dimension::Regularity: return "Regularity";
    case Dimension::Proactivity: return "Proactivity";
    case Dimension::Control: return "Control";
  }
  return "unknown";
}

std::span<const FeatureSpec> feature_specs() { return kSpecs; }

std::vector<std::string> feature_names() {
  std::vector<std::string> names;
  for (const auto& s : kSpecs) names.emplace_back(s.name);
  return names;
}

std::optional<std::size_t> feature_index(std::string_view name) {
  for (std::size_t i = 0; i < kSpecs.size(); ++i)
    if (kSpecs[i].name == name) return i;
  return std::nullopt;
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> students_, int weeks_, std::vector<std::string> features_)
    : students(std::move(students_)), weeks(weeks_), features(std::move(features_)) {
  values.assign(students.size() * width(), 0.0);
  nan_mask.assign(values.size(), 0);
  per_feature_min.assign(features.size(), 0.0);
}

std::optional<std::size_t> FeatureMatrix::student_index(std::string_view id) const {
  auto it = std::lower_bound(students.begin(), students.end(), id);
  if (it != students.end() && *it == id) return static_cast<std::size_t>(it - students.begin());
  for (std::size_t i = 0; i < students.size(); ++i)
    if (students[i] == id) return i;
  return std::nullopt;
}

std::vector<double> extract_student_features(std::span<const Interaction> events,
                                             const CourseSchedule& schedule, const ExtractOptions& options) {
  const auto W = static_cast<std::size_t>(schedule.weeks);
  std::vector<WeekAcc> acc(W);
  std::vector<double> out(W * kFeatureCount, 0.0);
  auto cell = [&](std::size_t w, Col c) -> double& { return out[w * kFeatureCount + c]; };

  std::map<std::string, const LearningObject*> objects;
  for (const auto& o : schedule.objects) objects.emplace(o.object_id, &o);

  const auto sessions = sessionize(events, options.gap_threshold);
  std::vector<std::size_t> week(events.size());
  for (std::size_t i = 0; i < events.size(); ++i)
    week[i] = static_cast<std::size_t>(assign_week(events[i].timestamp, schedule));

  // First-view / first-play / first-submit weeks.
  std::map<std::string, std::size_t> first_view, first_play;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    first_view.emplace(ev.object_id, week[i]);
    if (ev.action == Action::VideoPlay) first_play.emplace(ev.object_id, week[i]);
  }

  // Per-event counters and gap attribution.
  const std::string* playing = nullptr;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& ev = events[i];
    WeekAcc& a = acc[week[i]];
    const std::int64_t day = ev.timestamp / kDay;
    a.hours_by_day.try_emplace(day, std::array<double, 24>{})
        .first->second[static_cast<std::size_t>((ev.timestamp % kDay) / 3600)] += 1.0;
    (day % 7 >= 5 ? a.weekend_clicks : a.weekday_clicks) += 1;

    switch (ev.action) {
      case Action::QuizSubmit:
        ++a.submissions;
        a.quizzes_submitted.insert(ev.object_id);
        if (ev.correct.value_or(false)) {
          ++a.correct;
          ++a.quiz_correct_by_obj[ev.object_id];
        }
        playing = nullptr;
        break;
      case Action::VideoPlay:
        playing = &ev.object_id;
        break;
      case Action::VideoLoad:
        a.loaded.insert(ev.object_id);
        playing = nullptr;
        break;
      case Action::VideoPause:
        ++a.pauses;
        playing = nullptr;
        break;
      case Action::VideoStop:
        playing = nullptr;
        break;
      case Action::VideoSeek:
        a.seek_lengths.push_back(std::abs(*ev.seek_to - *ev.seek_from));
        if (playing && *playing != ev.object_id) playing = nullptr;
        break;
      case Action::VideoSpeedChange:
        a.speeds.push_back(*ev.speed);
        if (playing && *playing != ev.object_id) playing = nullptr;
        break;
    }
    if (is_video_action(ev.action)) {
      ++a.video_events;
      a.opened.insert(ev.object_id);
    }

    if (i + 1 < events.size()) {
      const std::int64_t gap = events[i + 1].timestamp - ev.timestamp;
      if (gap > options.gap_threshold) {
        playing = nullptr;
        continue;
      }
      const auto g = static_cast<double>(gap);
      if (is_video_action(ev.action)) {
        a.video_time += g;
      } else {
        a.quiz_time += g;
        a.quiz_time_by_obj[ev.object_id] += g;
      }
      if (playing) a.watched[*playing] += g;
    }
  }

  // Session-level statistics and trigrams.
  for (const auto& s : sessions) {
    const auto w = static_cast<std::size_t>(assign_week(s.start, schedule));
    acc[w].session_durations.push_back(static_cast<double>(s.duration()));
    acc[w].session_time += static_cast<double>(s.duration());
    for (const auto& ev : s.events)
      if (ev.action == Action::VideoPlay) ++acc[w].session_plays;
    for (std::size_t i = 0; i + 2 < s.events.size(); ++i) {
      const auto& x = s.events[i];
      const auto& y = s.events[i + 1];
      const auto& z = s.events[i + 2];
      WeekAcc& a = acc[static_cast<std::size_t>(assign_week(x.timestamp, schedule))];
      if (is_trigram(x, y, z, Action::QuizSubmit, Action::QuizSubmit, Action::QuizSubmit)) ++a.ccc;
      if (is_trigram(x, y, z, Action::VideoPlay, Action::VideoStop, Action::VideoPlay)) ++a.psp;
      if (is_trigram(x, y, z, Action::VideoPlay, Action::VideoPause, Action::VideoLoad)) ++a.ppl;
      if (is_trigram(x, y, z, Action::VideoPause, Action::VideoSpeedChange, Action::VideoPlay)) ++a.psc;
    }
  }

  const double n_weeks = static_cast<double>(W);
  std::map<std::string, double> cumulative_watch;
  double cumulative_video_time = 0.0;
  for (std::size_t w = 0; w < W; ++w) {
    const WeekAcc& a = acc[w];
    for (const auto& [video, secs] : a.watched) cumulative_watch[video] += secs;

    // Effort
    cell(w, CheckCheckCheckQuiz) = a.ccc;
    cell(w, CorrectTimeQuiz) = a.correct > 0 ? a.quiz_time / a.correct : kNaN;
    cell(w, DistinctProbsQuiz) = static_cast<double>(a.quizzes_submitted.size());
    cell(w, NumSubmitQuiz) = a.quizzes_submitted.empty()
                                 ? kNaN
                                 : static_cast<double>(a.submissions) / static_cast<double>(a.quizzes_submitted.size());
    cumulative_video_time += a.video_time;
    cell(w, TotalTimeVid) = cumulative_video_time;

    // Regularity
    if (a.loaded.empty()) {
      cell(w, ActiveParticipationWeeklyVid) = kNaN;
    } else {
      int full = 0;
      for (const auto& v : a.loaded) {
        auto it = cumulative_watch.find(v);
        const double watched = it == cumulative_watch.end() ? 0.0 : it->second;
        if (watched >= options.full_watch_fraction * *objects.at(v)->duration_sec) ++full;
      }
      cell(w, ActiveParticipationWeeklyVid) = static_cast<double>(full) / static_cast<double>(a.loaded.size());
    }
    {
      int released = 0, played = 0;
      for (const auto& o : schedule.objects) {
        if (o.kind != ObjectKind::Video || static_cast<std::size_t>(o.scheduled_week) > w) continue;
        ++released;
        auto it = first_play.find(o.object_id);
        if (it != first_play.end() && it->second <= w) ++played;
      }
      cell(w, AttendanceRate) = released > 0 ? static_cast<double>(played) / released : kNaN;
    }
    {
      std::vector<std::array<double, 24>> hists;
      for (const auto& [day, h] : a.hours_by_day) hists.push_back(h);
      cell(w, HourlyFreqRegular) = mean_pairwise_cosine(hists);
    }
    {
      double sum = 0.0;
      int n = 0;
      for (const auto& v : a.opened) {
        auto it = a.watched.find(v);
        const double watched = it == a.watched.end() ? 0.0 : it->second;
        sum += std::min(1.0, watched / *objects.at(v)->duration_sec);
        ++n;
      }
      cell(w, WatchRatioVid) = n > 0 ? sum / n : kNaN;
    }
    cell(w, StdTimeSession) = population_std(a.session_durations);

    // Proactivity
    auto eager = [&](ObjectKind kind) {
      double sum = 0.0;
      int n = 0;
      for (const auto& [id, fw] : first_view) {
        const LearningObject* o = objects.at(id);
        if (o->kind != kind || fw != w || static_cast<std::size_t>(o->scheduled_week) < w) continue;
        sum += (static_cast<double>(o->scheduled_week) - static_cast<double>(w)) / n_weeks;
        ++n;
      }
      return n > 0 ? sum / n : kNaN;
    };
    cell(w, EagerViewVid) = eager(ObjectKind::Video);
    cell(w, EagerViewQuiz) = eager(ObjectKind::Quiz);
    {
      int scheduled = 0, timely = 0;
      for (const auto& o : schedule.objects) {
        if (o.kind != ObjectKind::Video || static_cast<std::size_t>(o.scheduled_week) != w) continue;
        ++scheduled;
        auto it = first_view.find(o.object_id);
        if (it != first_view.end() && it->second == w) ++timely;
      }
      cell(w, TimelyViewVid) = scheduled > 0 ? static_cast<double>(timely) / scheduled : kNaN;
    }
    cell(w, RatioClicksWeekend) =
        a.weekday_clicks > 0 ? static_cast<double>(a.weekend_clicks) / a.weekday_clicks : kNaN;
    {
      std::vector<double> per_quiz;
      for (const auto& [q, correct] : a.quiz_correct_by_obj) {
        auto it = a.quiz_time_by_obj.find(q);
        per_quiz.push_back((it == a.quiz_time_by_obj.end() ? 0.0 : it->second) / correct);
      }
      cell(w, StdCorrectTimeQuiz) = population_std(per_quiz);
    }

    // Control
    {
      double sum = 0.0;
      for (double x : a.seek_lengths) sum += x;
      cell(w, AvgLenSeekVid) = a.seek_lengths.empty() ? kNaN : sum / static_cast<double>(a.seek_lengths.size());
    }
    cell(w, FreqPauseVid) = a.video_time > 0 ? a.pauses / (a.video_time / 3600.0) : kNaN;
    cell(w, FreqPlayVid) = a.session_time > 0 ? a.session_plays / (a.session_time / 3600.0) : kNaN;
    cell(w, PlayStopPlayVid) = a.psp;
    cell(w, PlayPauseLoadVid) = a.ppl;
    cell(w, PauseSpeedchangePlayVid) = a.psc;
    if (!a.speeds.empty()) {
      double sum = 0.0;
      for (double x : a.speeds) sum += x;
      cell(w, SpeedVid) = sum / static_cast<double>(a.speeds.size());
    } else {
      cell(w, SpeedVid) = a.video_events > 0 ? 1.0 : kNaN;
    }
  }
  return out;
}

FeatureMatrix extract_features(std::span<const Interaction> events, const CourseSchedule& schedule,
                               std::span<const StudentLabel> labels, const ExtractOptions& options) {
  const auto report = validate_course(schedule, events, labels);
  if (!report.ok()) throw ValidationError("inconsistent dataset:\n" + report.describe());

  std::vector<std::string> students;
  for (const auto& l : labels) students.push_back(l.student_id);
  std::sort(students.begin(), students.end());

  // Group each student's events; input order within a student is kept and
  // must already be time ordered.
  std::map<std::string, std::vector<Interaction>> by_student;
  for (const auto& ev : events) by_student[ev.student_id].push_back(ev);

  FeatureMatrix m(students, schedule.weeks, feature_names());
  for (std::size_t s = 0; s < students.size(); ++s) {
    const auto block = extract_student_features(by_student[students[s]], schedule, options);
    std::copy(block.begin(), block.end(), m.values.begin() + static_cast<std::ptrdiff_t>(s * m.width()));
  }
  return m;
}

FeatureMatrix impute_nan(const FeatureMatrix& raw) {
  FeatureMatrix m = raw;
  const std::size_t F = m.n_features();
  std::vector<double> mins(F, std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const double v = m.values[i];
    if (!std::isnan(v) && !m.nan_mask[i]) mins[i % F] = std::min(mins[i % F], v);
  }
  for (auto& v : mins)
    if (std::isinf(v)) v = 0.0;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (std::isnan(m.values[i]) || m.nan_mask[i]) {
      m.values[i] = mins[i % F];
      m.nan_mask[i] = 1;
    }
  }
  m.per_feature_min = std::move(mins);
  return m;
}

NormalizationStats fit_normalization(const FeatureMatrix& matrix, std::span<const std::size_t> students) {
  const std::size_t F = matrix.n_features();
  NormalizationStats stats{matrix.features, std::vector<double>(F, std::numeric_limits<double>::infinity()),
                           std::vector<double>(F, -std::numeric_limits<double>::infinity())};
  for (std::size_t s : students)
    for (std::size_t w = 0; w < static_cast<std::size_t>(matrix.weeks); ++w)
      for (std::size_t f = 0; f < F; ++f) {
        const double v = matrix.at(s, w, f);
        if (std::isnan(v)) continue;
        stats.min[f] = std::min(stats.min[f], v);
        stats.max[f] = std::max(stats.max[f], v);
      }
  for (std::size_t f = 0; f < F; ++f)
    if (stats.min[f] > stats.max[f]) stats.min[f] = stats.max[f] = 0.0;
  return stats;
}

FeatureMatrix normalize_features(const FeatureMatrix& matrix, const NormalizationStats& stats) {
  FeatureMatrix m = matrix;
  const std::size_t F = m.n_features();
  std::vector<std::size_t> column(F);
  for (std::size_t f = 0; f < F; ++f) {
    auto it = std::find(stats.features.begin(), stats.features.end(), m.features[f]);
    if (it == stats.features.end())
      throw ShapeError(fmt::format("normalization stats missing feature '{}'", m.features[f]));
    column[f] = static_cast<std::size_t>(it - stats.features.begin());
  }
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    const std::size_t c = column[i % F];
    const double lo = stats.min[c], hi = stats.max[c];
    m.values[i] = hi > lo ? std::clamp((m.values[i] - lo) / (hi - lo), 0.0, 1.0) : 0.0;
  }
  return m;
}

}  // namespace elab
