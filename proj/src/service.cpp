#include "scanpath/service.hpp"

#include <httplib.h>

#include <cmath>

#include "scanpath/metrics.hpp"
#include "scanpath/render.hpp"

namespace scanpath {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict:
    case ErrorCode::SegmentOverlap: return 409;
    case ErrorCode::Forbidden: return 403;
    case ErrorCode::Io:
    case ErrorCode::SchemaMismatch: return 500;
    default: return 422;
  }
}

namespace {

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send_json(res, {{"error", std::string(to_string(code))}, {"message", message}}, http_status(code));
}

// Maps library and parse failures to statuses.
Handler guarded(Handler h) {
  return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
    try {
      h(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const json::exception& e) {
      send_error(res, ErrorCode::ParseError, e.what());
    } catch (const std::invalid_argument& e) {
      send_error(res, ErrorCode::ParseError, e.what());
    } catch (const std::out_of_range& e) {
      send_error(res, ErrorCode::ParseError, e.what());
    }
  };
}

Role role_of(const httplib::Request& req) {
  if (!req.has_header("X-Reviewer-Role")) fail(ErrorCode::Forbidden, "missing X-Reviewer-Role header");
  return parse_role(req.get_header_value("X-Reviewer-Role"));
}

json body_json(const httplib::Request& req) { return parse_json_or_throw(req.body, "request body"); }

double number_param(const httplib::Request& req, const std::string& key, double fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::size_t used = 0;
  const double d = std::stod(v, &used);
  if (used != v.size() || !std::isfinite(d)) fail(ErrorCode::ParseError, "bad number for '" + key + "'");
  return d;
}

// Withheld fields are left out of the body, not sent as null.
json segment_json(const Segment& s, Role role) {
  json j = SessionStore::view_for(s, role);
  if (role == Role::Adjudicator || (s.label_r1 && s.label_r2)) return j;
  j.erase(role == Role::Reviewer1 ? "label_r2" : "label_r1");
  j.erase("label_final");
  j.erase("override_justification");
  return j;
}

json segments_json(const std::vector<Segment>& segs, Role role) {
  json out = json::array();
  for (const auto& s : segs) out.push_back(segment_json(s, role));
  return out;
}

json irr_json(const IrrReport& r) {
  json j = {{"kappa", r.kappa ? json(*r.kappa) : json(nullptr)},
            {"dual_labeled", r.dual_labeled},
            {"agreements", r.agreements},
            {"disagreements", r.disagreements}};
  return j;
}

}  // namespace

struct AnnotationService::Impl {
  SessionStore& store;
  FilterConfig filter;
  httplib::Server server;

  Impl(SessionStore& s, FilterConfig f) : store(s), filter(f) { routes(); }

  void routes() {
    auto& S = server;
    S.Get("/api/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, json(store.list()));
    }));

    S.Post("/api/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      for (const char* part : {"gaze", "viewport", "layout"}) {
        if (!req.has_file(part)) fail(ErrorCode::ParseError, std::string("missing upload part '") + part + "'");
      }
      SessionBundle b;
      if (req.has_file("session_id")) b.session_id = req.get_file_value("session_id").content;
      if (req.has_file("participant_id")) b.participant_id = req.get_file_value("participant_id").content;
      if (req.has_file("condition")) b.condition = parse_condition(req.get_file_value("condition").content);
      b.samples = parse_gaze_log(req.get_file_value("gaze").content, b.session_id);
      b.rect_events = parse_viewport_log(req.get_file_value("viewport").content);
      b.layout = parse_layout(req.get_file_value("layout").content);
      send_json(res, json(store.create(std::move(b), filter)), 201);
    }));

    S.Get(R"(/api/sessions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, json(store.record(req.matches[1])));
    }));

    S.Get(R"(/api/sessions/([^/]+)/fixations)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const double from = number_param(req, "from", -1e300);
      const double to = number_param(req, "to", 1e300);
      send_json(res, json(store.fixations(req.matches[1], from, to)));
    }));

    S.Get(R"(/api/sessions/([^/]+)/segments)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Role role = role_of(req);
      send_json(res, segments_json(store.segments(req.matches[1]), role));
    }));

    S.Post(R"(/api/sessions/([^/]+)/segments)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Role role = role_of(req);
      const json b = body_json(req);
      const auto s = store.create_segment(req.matches[1], role, b.at("start_ms").get<double>(),
                                          b.at("end_ms").get<double>());
      send_json(res, segment_json(s, role), 201);
    }));

    S.Put(R"(/api/sessions/([^/]+)/segments/([^/]+)/label)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Role role = role_of(req);
            const auto label = parse_behavior(body_json(req).at("label").get<std::string>());
            send_json(res, segment_json(store.set_label(req.matches[1], req.matches[2], role, label), role));
          }));

    S.Put(R"(/api/sessions/([^/]+)/segments/([^/]+)/final)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Role role = role_of(req);
            const json b = body_json(req);
            std::optional<std::string> why;
            if (b.contains("justification") && !b.at("justification").is_null()) {
              why = b.at("justification").get<std::string>();
            }
            const auto label = parse_behavior(b.at("label").get<std::string>());
            send_json(res, segment_json(store.set_final(req.matches[1], req.matches[2], role, label, why), role));
          }));

    S.Post(R"(/api/sessions/([^/]+)/segments/([^/]+)/split)",
           guarded([this](const httplib::Request& req, httplib::Response& res) {
             const Role role = role_of(req);
             const auto [a, b] = store.split(req.matches[1], req.matches[2], role,
                                             body_json(req).at("t_ms").get<double>());
             send_json(res, json::array({segment_json(a, role), segment_json(b, role)}), 201);
           }));

    S.Get(R"(/api/sessions/([^/]+)/segments/([^/]+)/labels/([12]))",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
            const Role role = role_of(req);
            const int reviewer = std::stoi(req.matches[3]);
            const auto l = store.read_label(req.matches[1], req.matches[2], role, reviewer);
            send_json(res, {{"reviewer", reviewer},
                            {"label", l ? json(std::string(to_string(*l))) : json(nullptr)}});
          }));

    S.Get(R"(/api/sessions/([^/]+)/irr)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, irr_json(store.irr(req.matches[1])));
    }));

    S.Get(R"(/api/sessions/([^/]+)/predictions)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("model")) fail(ErrorCode::ParseError, "missing 'model' parameter");
      const auto p = store.predictions(req.matches[1], req.get_param_value("model"));
      json labels = json::array();
      for (const auto& l : p.labels) labels.push_back(l ? json(std::string(to_string(*l))) : json(nullptr));
      send_json(res, {{"model", p.model}, {"labels", labels}});
    }));

    S.Get(R"(/api/sessions/([^/]+)/export)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(store.export_annotation_table(req.matches[1]), "text/tab-separated-values");
    }));

    S.Get(R"(/api/render/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const double from = number_param(req, "from", -1e300);
      const double to = number_param(req, "to", 1e300);
      RenderConfig cfg;
      cfg.width_px = static_cast<int>(number_param(req, "w", cfg.width_px));
      cfg.height_px = static_cast<int>(number_param(req, "h", cfg.height_px));
      if (cfg.width_px < 1 || cfg.height_px < 1 || cfg.width_px > 4096 || cfg.height_px > 4096) {
        fail(ErrorCode::InvalidConfig, "image size must be within 1..4096");
      }
      const auto fx = store.fixations(req.matches[1], from, to);
      res.set_content(encode_png(render_window(fx, cfg)), "image/png");
    }));
  }
};

AnnotationService::AnnotationService(SessionStore& store, FilterConfig filter)
    : impl_(std::make_unique<Impl>(store, filter)) {}

AnnotationService::~AnnotationService() { stop(); }

int AnnotationService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int p = impl_->server.bind_to_any_port(host);
    if (p <= 0) fail(ErrorCode::Io, "cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) fail(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void AnnotationService::run() { impl_->server.listen_after_bind(); }

void AnnotationService::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace scanpath
