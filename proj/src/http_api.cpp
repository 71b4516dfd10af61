/*
 * Copyright 2026 The artscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "artscore/http_api.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "artscore/errors.hpp"

namespace artscore {

using nlohmann::json;
using nlohmann::ordered_json;

int http_status(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::kDomain:
    case Error::Kind::kValidation: return 400;
    case Error::Kind::kForbidden: return 403;
    case Error::Kind::kNotFound: return 404;
    case Error::Kind::kConflict: return 409;
    case Error::Kind::kConfig:
    case Error::Kind::kIo:
    case Error::Kind::kNumeric: return 500;
  }
  return 500;
}

namespace {

struct Unauthorized : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ApiResponse json_response(int status, const ordered_json& body) { return {status, "application/json", body.dump()}; }

ApiResponse error_response(int status, const std::string& message, const std::vector<std::string>& violations = {}) {
  ordered_json j;
  j["error"] = message;
  j["violations"] = violations;
  return json_response(status, j);
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : path) {
    if (ch == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw DomainError(std::string("malformed JSON body: ") + e.what());
  }
}

Caller require_caller(AnnotationService& service, const std::string& campaign_id, const std::string& header) {
  constexpr std::string_view kPrefix = "Bearer ";
  service.phase(campaign_id);  // 404 before 401 for unknown campaigns
  if (header.size() <= kPrefix.size() || header.compare(0, kPrefix.size(), kPrefix) != 0) {
    throw Unauthorized("missing bearer token");
  }
  try {
    return service.authenticate(campaign_id, header.substr(kPrefix.size()));
  } catch (const ForbiddenError& e) {
    throw Unauthorized(e.what());
  }
}

CampaignSpec campaign_spec_from_json(const json& j) {
  CampaignSpec spec;
  for (const auto& img : j.at("images")) {
    ImageEntry e;
    e.image_id = img.at("image_id").get<std::string>();
    e.file_path = img.value("file_path", std::string());
    e.category_index = img.at("category_index").get<int>();
    e.source_tier = parse_source_tier(img.value("source_tier", std::string("professional")));
    spec.images.push_back(std::move(e));
  }
  for (const auto& a : j.at("annotators")) {
    spec.annotators.push_back({a.at("annotator_id").get<std::string>(), parse_role(a.value("role", "student"))});
  }
  if (j.contains("quorum")) {
    const auto q = j.at("quorum").get<long long>();
    if (q < 1) throw ValidationError("invalid campaign: quorum must be >= 1", {"quorum must be >= 1"});
    spec.quorum = static_cast<std::size_t>(q);
  }
  return spec;
}

std::string content_type_for(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".bmp") return "image/bmp";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

ApiResponse route(AnnotationService& service, const ApiRequest& req) {
  const auto parts = split_path(req.path);
  if (parts.empty() || parts[0] != "campaigns") return error_response(404, "no route for " + req.path);

  if (parts.size() == 1) {
    if (req.method != "POST") return error_response(405, "method not allowed");
    const json body = parse_body(req.body);
    const auto created = service.create_campaign(campaign_spec_from_json(body));
    ordered_json out;
    out["campaign_id"] = created.campaign_id;
    out["tokens"] = created.tokens;
    return json_response(201, out);
  }

  const std::string& id = parts[1];
  if (parts.size() == 4 && parts[2] == "images" && req.method == "GET") {
    const auto path = service.image_path(id, parts[3]);
    if (!path) return error_response(404, "no image file for " + parts[3]);
    std::ifstream in(*path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    return {200, content_type_for(*path), bytes.str()};
  }
  if (parts.size() != 3) return error_response(404, "no route for " + req.path);
  const std::string& action = parts[2];

  if (req.method == "GET") {
    if (action == "taxonomy") {
      service.phase(id);
      return json_response(200, taxonomy_json());
    }
    const Caller caller = require_caller(service, id, req.authorization);
    if (action == "tasks") {
      auto it = req.query.find("annotator");
      const std::string annotator = it == req.query.end() ? caller.annotator_id : it->second;
      auto tasks = ordered_json::array();
      for (const auto& t : service.pending_tasks(caller, annotator)) tasks.push_back(to_json(t));
      ordered_json out;
      out["annotator_id"] = annotator;
      out["tasks"] = std::move(tasks);
      return json_response(200, out);
    }
    if (action == "progress") return json_response(200, to_json(service.progress(id)));
    return error_response(404, "no route for " + req.path);
  }

  if (req.method != "POST") return error_response(405, "method not allowed");
  const Caller caller = require_caller(service, id, req.authorization);
  const json body = parse_body(req.body);
  if (action == "benchmarks") {
    std::vector<BenchmarkReference> refs;
    for (const auto& r : body.at("references")) {
      BenchmarkReference ref;
      ref.image_id = r.at("image_id").get<std::string>();
      ref.file_path = r.value("file_path", std::string());
      ref.scores = score_vector_from_json(r.at("total_score"), r.at("attribute_scores"));
      refs.push_back(std::move(ref));
    }
    const int cat = body.at("category_index").get<int>();
    service.set_benchmarks(caller, cat, std::move(refs));
    return json_response(200, {{"category_index", cat}, {"status", "stored"}});
  }
  if (action == "open") {
    const auto assignments = service.open_scoring(caller);
    ordered_json out;
    out["phase"] = "scoring";
    ordered_json counts = ordered_json::object();
    for (const auto& [a, imgs] : assignments) counts[a] = imgs.size();
    out["assigned"] = std::move(counts);
    return json_response(200, out);
  }
  if (action == "annotations") {
    const std::string image_id = body.at("image_id").get<std::string>();
    const ScoreVector scores = score_vector_from_json(body.at("total_score"), body.at("attribute_scores"));
    service.submit_annotation(caller, image_id, scores, body.value("overwrite", false));
    ordered_json out;
    out["status"] = "accepted";
    out["image_id"] = image_id;
    out["annotator_id"] = caller.annotator_id;
    return json_response(201, out);
  }
  if (action == "close") {
    const auto paths = service.close_and_export(caller);
    ordered_json out;
    out["phase"] = "closed";
    out["dataset"] = paths.dataset.string();
    out["aggregates"] = paths.aggregates.string();
    return json_response(200, out);
  }
  return error_response(404, "no route for " + req.path);
}

}  // namespace

ApiResponse dispatch(AnnotationService& service, const ApiRequest& request) {
  try {
    return route(service, request);
  } catch (const Unauthorized& e) {
    return error_response(401, e.what());
  } catch (const ValidationError& e) {
    return error_response(http_status(e), e.what(), e.violations());
  } catch (const Error& e) {
    return error_response(http_status(e), e.what());
  } catch (const json::exception& e) {
    return error_response(400, std::string("bad request body: ") + e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

struct HttpServer::Impl {
  AnnotationService& service;
  httplib::Server server;

  explicit Impl(AnnotationService& s) : service(s) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      ApiRequest r;
      r.method = req.method;
      r.path = req.path;
      for (const auto& [k, v] : req.params) r.query.emplace(k, v);
      r.authorization = req.get_header_value("Authorization");
      r.body = req.body;
      const ApiResponse out = dispatch(service, r);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    server.Get(R"(/.*)", handler);
    server.Post(R"(/.*)", handler);
  }
};

HttpServer::HttpServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }
void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}
bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace artscore
