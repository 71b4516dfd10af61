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

#pragma once

#include <map>
#include <memory>
#include <string>

#include "artscore/annotation_service.hpp"
#include "artscore/errors.hpp"

namespace artscore {

struct ApiRequest {
  std::string method;  // "GET" / "POST"
  std::string path;    // without query string
  std::map<std::string, std::string> query;
  std::string authorization;  // raw Authorization header value
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Routes one request against the service. Never throws; library errors become
// {"error": ..., "violations": [...]} bodies with the matching status code
// (400 validation, 401 missing or bad token, 403 role, 404 unknown ids,
// 409 phase conflicts and duplicates).
ApiResponse dispatch(AnnotationService& service, const ApiRequest& request);

int http_status(const Error& e);

// Blocking HTTP front end over dispatch().
class HttpServer {
 public:
  explicit HttpServer(AnnotationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // port 0 picks a free port; returns the bound port or -1.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace artscore
