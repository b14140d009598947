#include <doctest.h>
#include <unistd.h>

#include <thread>

#include "../support/fixtures.hpp"
#include "../support/store_fixture.hpp"
#include "scanpath/json_io.hpp"
#include "scanpath/store.hpp"

using namespace scanpath;

namespace {
constexpr Role R1 = Role::Reviewer1, R2 = Role::Reviewer2, ADJ = Role::Adjudicator;
constexpr BehaviorLabel SEQ = BehaviorLabel::Sequential, SKIM = BehaviorLabel::Skimming;
}  // namespace

TEST_CASE("session lifecycle") {
  fixture::TempDir tmp("scanpath-store");
  SessionStore store(tmp.path);
  CHECK(store.list().empty());
  const auto rec = store.create(fixture::reading_bundle("s1"));
  CHECK(rec.session_id == "s1");
  CHECK(rec.participant_id == "P01");
  CHECK(rec.schema_version == kStoreSchemaVersion);
  CHECK(rec.created_at.size() == 20);
  CHECK(rec.created_at.back() == 'Z');
  CHECK(store.exists("s1"));
  CHECK(store.list().size() == 1);
  CHECK(store.fixations("s1").size() == 60);
  CHECK(store.saccades("s1").size() == 59);
  CHECK(store.fixations("s1", 80000, 81100).size() == 2);
  CHECK(store.bundle("s1").samples == fixture::reading_bundle("s1").samples);
  CHECK(store.segments("s1").empty());
  CHECK_CODE(store.create(fixture::reading_bundle("s1")), ErrorCode::Conflict);
  CHECK_CODE(store.record("nope"), ErrorCode::NotFound);
  CHECK_CODE(store.record("../etc"), ErrorCode::NotFound);
  const auto fresh = store.create(fixture::reading_bundle(""));
  CHECK_FALSE(fresh.session_id.empty());
  CHECK(store.list().size() == 2);

  SessionStore reopened(tmp.path);
  CHECK(reopened.record("s1").created_at == rec.created_at);
}

TEST_CASE("unknown schema version is rejected") {
  fixture::TempDir tmp("scanpath-store-schema");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  const auto file = tmp.path / "s1" / "record.json";
  auto j = json::parse(read_text_file(file));
  j["schema_version"] = 99;
  write_file_atomic(file, j.dump());
  CHECK_CODE(store.record("s1"), ErrorCode::SchemaMismatch);
}

TEST_CASE("segment editing rules") {
  fixture::TempDir tmp("scanpath-store-seg");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  const auto a = store.create_segment("s1", R1, 80000, 116000);
  CHECK(a.segment_id == "seg-0001");
  CHECK(a.words_covered == 60);
  CHECK(a.wpm == doctest::Approx(100.0));
  CHECK_CODE(store.create_segment("s1", R1, 100000, 120000), ErrorCode::Conflict);
  CHECK_CODE(store.create_segment("s1", R2, 0, 1000), ErrorCode::Forbidden);
  CHECK_CODE(store.create_segment("s1", R1, 5, 5), ErrorCode::InvalidSegment);
  const auto b = store.create_segment("s1", ADJ, 0, 80000);
  CHECK(b.segment_id == "seg-0002");
  const auto segs = store.segments("s1");
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].start_ms == 0);
  CHECK_CODE(store.set_label("s1", "seg-0099", R1, SEQ), ErrorCode::NotFound);
  CHECK_CODE(store.create_segment("missing", R1, 0, 1), ErrorCode::NotFound);
}

TEST_CASE("blind dual review") {
  fixture::TempDir tmp("scanpath-store-blind");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  const auto id = store.create_segment("s1", R1, 80000, 116000).segment_id;

  const auto v1 = store.set_label("s1", id, R1, SEQ);
  CHECK(v1.label_r1 == SEQ);
  CHECK_FALSE(v1.label_r2.has_value());
  CHECK(store.segments_for("s1", R2)[0].label_r1 == std::nullopt);
  CHECK(store.read_label("s1", id, R1, 1) == SEQ);
  CHECK_CODE(store.read_label("s1", id, R2, 1), ErrorCode::Forbidden);
  CHECK(store.read_label("s1", id, ADJ, 1) == SEQ);
  CHECK_CODE(store.set_label("s1", id, ADJ, SEQ), ErrorCode::Forbidden);

  SUBCASE("agreement sets the final label") {
    const auto v2 = store.set_label("s1", id, R2, SEQ);
    CHECK(v2.label_r1 == SEQ);
    CHECK(v2.label_final == SEQ);
    CHECK(store.read_label("s1", id, R2, 1) == SEQ);
    const auto irr = store.irr("s1");
    CHECK(irr.dual_labeled == 1);
    CHECK(irr.agreements == 1);
    CHECK(irr.disagreements.empty());
  }
  SUBCASE("disagreement needs the adjudicator") {
    const auto v2 = store.set_label("s1", id, R2, SKIM);
    CHECK_FALSE(v2.label_final.has_value());
    CHECK_CODE(store.set_final("s1", id, R1, SEQ), ErrorCode::Forbidden);
    const auto f = store.set_final("s1", id, ADJ, SEQ);
    CHECK(f.label_final == SEQ);
    CHECK(store.irr("s1").disagreements.size() == 1);
  }
  SUBCASE("override without reviewer 2") {
    CHECK_CODE(store.set_final("s1", id, ADJ, SEQ), ErrorCode::Conflict);
    CHECK_CODE(store.set_final("s1", id, ADJ, SEQ, std::string()), ErrorCode::Conflict);
    const auto f = store.set_final("s1", id, ADJ, SKIM, std::string("reviewer 2 unavailable"));
    CHECK(f.label_final == SKIM);
    CHECK(f.override_justification == "reviewer 2 unavailable");
    CHECK_FALSE(store.segments_for("s1", R1)[0].label_final.has_value());
  }
}

TEST_CASE("irr over several segments") {
  fixture::TempDir tmp("scanpath-store-irr");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  CHECK_FALSE(store.irr("s1").kappa.has_value());
  const BehaviorLabel l1[] = {SEQ, SEQ, SKIM, SKIM};
  const BehaviorLabel l2[] = {SEQ, SKIM, SEQ, SKIM};
  for (int i = 0; i < 4; ++i) {
    const auto id = store.create_segment("s1", R1, i * 10000.0, i * 10000.0 + 5000).segment_id;
    store.set_label("s1", id, R1, l1[i]);
    store.set_label("s1", id, R2, l2[i]);
  }
  store.create_segment("s1", R1, 60000, 61000);
  const auto irr = store.irr("s1");
  CHECK(irr.dual_labeled == 4);
  REQUIRE(irr.kappa.has_value());
  CHECK(*irr.kappa == doctest::Approx(0.0));
  CHECK(irr.disagreements.size() == 2);
}

TEST_CASE("split") {
  fixture::TempDir tmp("scanpath-store-split");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  const auto id = store.create_segment("s1", R1, 80000, 116000).segment_id;
  store.set_label("s1", id, R1, SEQ);
  CHECK_CODE(store.split("s1", id, R1, 80000), ErrorCode::InvalidSegment);
  CHECK_CODE(store.split("s1", id, R1, 116000), ErrorCode::InvalidSegment);
  CHECK_CODE(store.split("s1", id, R2, 90000), ErrorCode::Forbidden);
  // 97700 falls in the gap between fixations 29 and 30.
  const auto [a, b] = store.split("s1", id, R1, 97700);
  CHECK(a.segment_id == id);
  CHECK(b.segment_id != id);
  CHECK(a.end_ms == 97700);
  CHECK(b.start_ms == 97700);
  CHECK_FALSE(a.label_r1.has_value());
  CHECK(a.words_covered + b.words_covered == 60);
  CHECK(store.segments("s1").size() == 2);
}

TEST_CASE("annotation export") {
  fixture::TempDir tmp("scanpath-store-export");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  const auto id = store.create_segment("s1", R1, 80000, 116000).segment_id;
  store.set_label("s1", id, R1, SEQ);
  store.set_label("s1", id, R2, SEQ);
  const auto t = store.export_annotation_table("s1");
  CHECK(t == "start\tend\tlabel_1\tlabel_2\tfinal_label\twords_covered\twpm\n"
             "1:20\t1:56\tsequential\tsequential\tsequential\t60\t100.00\n");
  CHECK(store.export_annotation_table("s1") == t);
  CHECK(format_clock(0) == "0:00");
  CHECK(format_clock(59999) == "0:59");
  CHECK(format_clock(61000) == "1:01");
  CHECK(format_clock(3600000) == "60:00");
}

TEST_CASE("concurrent reviewers lose no writes") {
  fixture::TempDir tmp("scanpath-store-conc");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  std::vector<std::string> ids;
  for (int i = 0; i < 20; ++i) ids.push_back(store.create_segment("s1", R1, i * 5000.0, i * 5000.0 + 4000).segment_id);
  std::thread t1([&] {
    for (const auto& id : ids) store.set_label("s1", id, R1, SEQ);
  });
  std::thread t2([&] {
    for (const auto& id : ids) store.set_label("s1", id, R2, SKIM);
  });
  t1.join();
  t2.join();
  for (const auto& s : store.segments("s1")) {
    CHECK(s.label_r1 == SEQ);
    CHECK(s.label_r2 == SKIM);
  }
}

TEST_CASE("prediction timelines") {
  fixture::TempDir tmp("scanpath-store-pred");
  SessionStore store(tmp.path);
  store.create(fixture::reading_bundle("s1"));
  CHECK_CODE(store.predictions("s1", "cnn2d"), ErrorCode::NotFound);
  PredictionTimeline p{"manual", std::vector<std::optional<BehaviorLabel>>(60)};
  p.labels[10] = SKIM;
  store.put_predictions("s1", p);
  const auto back = store.predictions("s1", "manual");
  CHECK(back.labels == p.labels);

  auto net = cnn::Network::make_2d();
  net.init(1);
  store.register_model("cnn2d", net);
  const auto q = store.predictions("s1", "cnn2d");
  REQUIRE(q.labels.size() == 60);
  for (std::size_t i = 0; i < 9; ++i) CHECK_FALSE(q.labels[i].has_value());
  for (std::size_t i = 9; i < 60; ++i) {
    REQUIRE(q.labels[i].has_value());
    CHECK(trained_class_index(*q.labels[i]) >= 0);
  }
}

TEST_CASE("roles") {
  CHECK(parse_role("reviewer1") == R1);
  CHECK(parse_role("reviewer2") == R2);
  CHECK(parse_role("adjudicator") == ADJ);
  CHECK_CODE(parse_role("admin"), ErrorCode::Forbidden);
  for (auto r : {R1, R2, ADJ}) CHECK(parse_role(to_string(r)) == r);
}
