#include <doctest.h>
#include <unistd.h>

#include <thread>

#include "../support/store_fixture.hpp"
#include "scanpath/json_io.hpp"
#include "scanpath/service.hpp"
// After Eigen-bearing headers.
#include <httplib.h>

using namespace scanpath;

namespace {

struct Server {
  fixture::TempDir tmp{"scanpath-service"};
  SessionStore store{tmp.path};
  AnnotationService svc{store};
  int port = svc.bind();
  std::thread th{[this] { svc.run(); }};
  httplib::Client cli{"127.0.0.1", port};
  ~Server() {
    svc.stop();
    th.join();
  }
};

const httplib::Headers kR1 = {{"X-Reviewer-Role", "reviewer1"}};
const httplib::Headers kR2 = {{"X-Reviewer-Role", "reviewer2"}};
const httplib::Headers kAdj = {{"X-Reviewer-Role", "adjudicator"}};

httplib::MultipartFormDataItems upload(const SessionBundle& b, const std::string& id) {
  return {{"gaze", format_gaze_csv(b.samples), "gaze.csv", "text/csv"},
          {"viewport", format_viewport_jsonl(b.rect_events), "viewport.jsonl", "application/json"},
          {"layout", format_layout_json(b.layout), "layout.json", "application/json"},
          {"session_id", id, "", ""},
          {"participant_id", "P07", "", ""},
          {"condition", "instructed", "", ""}};
}

json body(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_CASE("status mapping") {
  CHECK(http_status(ErrorCode::NotFound) == 404);
  CHECK(http_status(ErrorCode::Conflict) == 409);
  CHECK(http_status(ErrorCode::SegmentOverlap) == 409);
  CHECK(http_status(ErrorCode::Forbidden) == 403);
  CHECK(http_status(ErrorCode::Io) == 500);
  CHECK(http_status(ErrorCode::InvalidSegment) == 422);
  CHECK(http_status(ErrorCode::ParseError) == 422);
}

TEST_CASE("annotation API") {
  Server s;
  auto& cli = s.cli;
  const auto bundle = fixture::reading_bundle("ignored");

  auto res = cli.Post("/api/sessions", upload(bundle, "s1"));
  REQUIRE(res);
  CHECK(res->status == 201);
  CHECK(body(res)["participant_id"] == "P07");
  CHECK(body(res)["condition"] == "instructed");
  res = cli.Post("/api/sessions", upload(bundle, "s1"));
  CHECK(res->status == 409);
  httplib::MultipartFormDataItems partial = {{"gaze", "t_ms,sx,sy,valid\n", "gaze.csv", "text/csv"}};
  res = cli.Post("/api/sessions", partial);
  CHECK(res->status == 422);
  CHECK(body(res)["error"] == "ParseError");

  res = cli.Get("/api/sessions");
  CHECK(body(res).size() == 1);
  CHECK(cli.Get("/api/sessions/s1")->status == 200);
  CHECK(cli.Get("/api/sessions/nope")->status == 404);

  res = cli.Get("/api/sessions/s1/fixations?from=80000&to=81100");
  CHECK(body(res).size() == 2);
  CHECK(cli.Get("/api/sessions/s1/fixations?from=abc")->status == 422);

  CHECK(cli.Get("/api/sessions/s1/segments")->status == 403);
  CHECK(cli.Get("/api/sessions/s1/segments", {{"X-Reviewer-Role", "boss"}})->status == 403);

  res = cli.Post("/api/sessions/s1/segments", kR1, R"({"start_ms":80000,"end_ms":116000})", "application/json");
  REQUIRE(res->status == 201);
  const std::string seg = body(res)["segment_id"];
  CHECK(body(res)["wpm"] == 100.0);
  CHECK(cli.Post("/api/sessions/s1/segments", kR1, R"({"start_ms":1})", "application/json")->status == 422);
  CHECK(cli.Post("/api/sessions/s1/segments", kR1, "not json", "application/json")->status == 422);
  CHECK(cli.Post("/api/sessions/s1/segments", kR2, R"({"start_ms":0,"end_ms":1000})", "application/json")->status == 403);

  const std::string base = "/api/sessions/s1/segments/" + seg;
  CHECK(cli.Put(base + "/label", kR1, R"({"label":"sequential"})", "application/json")->status == 200);
  CHECK(cli.Put(base + "/label", kR1, R"({"label":"reading"})", "application/json")->status == 422);
  res = cli.Get("/api/sessions/s1/segments", kR2);
  CHECK_FALSE(body(res)[0].contains("label_r1"));
  CHECK(cli.Get(base + "/labels/1", kR2)->status == 403);
  CHECK(body(cli.Get(base + "/labels/1", kR1))["label"] == "sequential");
  res = cli.Put(base + "/label", kR2, R"({"label":"skimming"})", "application/json");
  CHECK(body(res)["label_r1"] == "sequential");
  CHECK(cli.Get(base + "/labels/1", kR2)->status == 200);

  CHECK(cli.Put(base + "/final", kR1, R"({"label":"sequential"})", "application/json")->status == 403);
  res = cli.Put(base + "/final", kAdj, R"({"label":"sequential"})", "application/json");
  CHECK(res->status == 200);
  CHECK(body(res)["label_final"] == "sequential");

  res = cli.Get("/api/sessions/s1/irr");
  CHECK(body(res)["dual_labeled"] == 1);
  CHECK(body(res)["disagreements"].size() == 1);

  res = cli.Get("/api/sessions/s1/export");
  CHECK(res->body.find("1:20\t1:56\tsequential\tskimming\tsequential\t60\t100.00") != std::string::npos);

  res = cli.Post(base + "/split", kR1, R"({"t_ms":98000})", "application/json");
  CHECK(res->status == 201);
  CHECK(body(res).size() == 2);
  CHECK(cli.Post(base + "/split", kR1, R"({"t_ms":10})", "application/json")->status == 422);

  CHECK(cli.Get("/api/sessions/s1/predictions?model=cnn2d")->status == 404);
  CHECK(cli.Get("/api/sessions/s1/predictions")->status == 422);

  res = cli.Get("/api/render/s1?from=80000&to=90000");
  REQUIRE(res->status == 200);
  CHECK(res->get_header_value("Content-Type") == "image/png");
  CHECK(res->body.substr(1, 3) == "PNG");
  CHECK(cli.Get("/api/render/s1?w=5000")->status == 422);
  CHECK(cli.Get("/api/render/s1?from=0&to=1")->status == 422);
}
