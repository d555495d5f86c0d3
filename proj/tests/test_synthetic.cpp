#include <map>

#include <gtest/gtest.h>

#include "elab/clickstream.hpp"
#include "elab/course_io.hpp"
#include "elab/error.hpp"
#include "elab/presets.hpp"
#include "elab/synthetic.hpp"

using namespace elab;

namespace {

std::vector<double> mean_weekly_events(const SyntheticCourse& c, bool passed) {
  std::map<std::string, bool> label;
  std::size_t n = 0;
  for (const auto& l : c.labels) {
    label[l.student_id] = l.passed;
    if (l.passed == passed) ++n;
  }
  std::vector<double> counts(static_cast<std::size_t>(c.schedule.weeks), 0.0);
  for (const auto& e : c.events)
    if (label.at(e.student_id) == passed) counts[static_cast<std::size_t>(assign_week(e.timestamp, c.schedule))] += 1;
  for (auto& v : counts) v /= static_cast<double>(n);
  return counts;
}

}  // namespace

TEST(Synthetic, SameSeedSameBytes) {
  SyntheticConfig cfg;
  cfg.n_students = 30;
  cfg.seed = 5;
  const auto a = generate_synthetic_course(cfg);
  const auto b = generate_synthetic_course(cfg);
  std::ostringstream sa, sb;
  write_events(sa, a.events);
  write_events(sb, b.events);
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_EQ(a.schedule, b.schedule);

  cfg.seed = 6;
  std::ostringstream sc;
  write_events(sc, generate_synthetic_course(cfg).events);
  EXPECT_NE(sa.str(), sc.str());
}

TEST(Synthetic, LabelCountFollowsPassRate) {
  SyntheticConfig cfg;
  cfg.n_students = 100;
  cfg.pass_rate = 0.5;
  const auto c = generate_synthetic_course(cfg);
  std::size_t pass = 0;
  for (const auto& l : c.labels) pass += l.passed;
  EXPECT_EQ(c.labels.size(), 100u);
  EXPECT_EQ(pass, 50u);
}

TEST(Synthetic, OutputIsConsistentAndSorted) {
  SyntheticConfig cfg;
  cfg.n_students = 40;
  cfg.weeks = 5;
  const auto c = generate_synthetic_course(cfg);
  EXPECT_TRUE(validate_course(c.schedule, c.events, c.labels).ok());
  for (std::size_t i = 1; i < c.events.size(); ++i) {
    const auto& p = c.events[i - 1];
    const auto& q = c.events[i];
    EXPECT_TRUE(p.student_id < q.student_id || (p.student_id == q.student_id && p.timestamp <= q.timestamp));
  }
}

TEST(Synthetic, FailingEngagementDecays) {
  SyntheticConfig cfg;
  cfg.n_students = 200;
  cfg.weeks = 4;
  cfg.engagement_decay_fail = 0.5;
  const auto c = generate_synthetic_course(cfg);
  const auto fail = mean_weekly_events(c, false);
  for (std::size_t w = 1; w < fail.size(); ++w) EXPECT_LT(fail[w], fail[w - 1]) << "week " << w;
}

TEST(Synthetic, RejectsBadKnobs) {
  SyntheticConfig cfg;
  cfg.pass_rate = 1.5;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.engagement_decay_fail = 0.0;
  EXPECT_THROW(generate_synthetic_course(cfg), ValidationError);
  cfg = {};
  cfg.weeks = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Presets, CatalogueAndPairs) {
  EXPECT_EQ(course_catalogue().size(), 9u);
  EXPECT_EQ(course_profile("mooc-la").weeks, 4);
  EXPECT_THROW(course_profile("nope"), ValidationError);
  for (const auto& name : preset_names()) {
    const auto p = make_preset(name);
    EXPECT_FALSE(p.courses.empty()) << name;
    for (const auto& c : p.courses) EXPECT_NO_THROW(c.validate()) << name << "/" << c.course_id;
  }
  EXPECT_EQ(make_preset("setting-fp").courses.size(), 2u);
  EXPECT_THROW(make_preset("unknown"), ValidationError);
}

TEST(Presets, ProfileDerivedKnobs) {
  const auto cfg = synthetic_from_profile(course_profile("va1"));
  EXPECT_EQ(cfg.weeks, 12);
  EXPECT_EQ(cfg.n_quizzes_per_week, 16);
  EXPECT_DOUBLE_EQ(cfg.pass_rate, 0.25);
  ASSERT_TRUE(cfg.metadata);
  EXPECT_DOUBLE_EQ(cfg.metadata->success_rate, 0.10);
}
