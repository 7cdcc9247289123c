// Copyright 2026 The ladc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"
#include "ladc/error.hpp"
#include "ladc/runner.hpp"

extern char** environ;

namespace ladc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path make_temp_dir(const std::string& prefix) {
  std::random_device rd;
  for (int attempt = 0; attempt < 100; ++attempt) {
    fs::path p = fs::temp_directory_path() /
                 (prefix + std::to_string(::getpid()) + "-" + std::to_string(rd()));
    std::error_code ec;
    if (fs::create_directory(p, ec)) return p;
  }
  fail(ErrorCode::kIo, "cannot create a temporary directory");
}

}  // namespace

struct SubprocessRunner::Impl {
  SubprocessOptions options;
  RunnerInfo info;
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  fs::path work_dir;
  bool owns_work_dir = false;
  fs::path stderr_path;
  std::string pending;  // bytes read past the last newline
  std::uint64_t request_id = 0;
  bool dead = false;

  ~Impl() { shutdown(); }

  void start() {
    if (options.command.empty()) fail(ErrorCode::kInvalidArgument, "runner command is empty");
    if (options.work_dir.empty()) {
      work_dir = make_temp_dir("ladc-runner-");
      owns_work_dir = true;
    } else {
      work_dir = options.work_dir;
      fs::create_directories(work_dir);
    }
    stderr_path = work_dir / "runner.stderr";

    int in_pipe[2], out_pipe[2];
    if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) {
      fail(ErrorCode::kIo, std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, stderr_path.c_str(),
                                     O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
    posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

    std::string cmd = options.command;
    char sh[] = "/bin/sh";
    char dash_c[] = "-c";
    char* argv[] = {sh, dash_c, cmd.data(), nullptr};
    const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child = in_pipe[1];
    from_child = out_pipe[0];
    if (rc != 0) {
      pid = -1;
      fail(ErrorCode::kRunnerExited, std::string("cannot start runner: ") + std::strerror(rc));
    }
    // A runner that dies must not kill us through SIGPIPE.
    ::signal(SIGPIPE, SIG_IGN);
    handshake();
  }

  std::string stderr_text() const {
    std::ifstream in(stderr_path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  [[noreturn]] void fail_with_stderr(ErrorCode code, const std::string& what) {
    const std::string err = stderr_text();
    fail(code, err.empty() ? what : what + "\n--- runner stderr ---\n" + err);
  }

  // Reads one line; timeout of zero waits indefinitely.
  std::string read_line(std::chrono::milliseconds timeout, ErrorCode timeout_code) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      auto nl = pending.find('\n');
      if (nl != std::string::npos) {
        std::string line = pending.substr(0, nl);
        pending.erase(0, nl + 1);
        return line;
      }
      int wait_ms = -1;
      if (timeout.count() > 0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
          fail_with_stderr(timeout_code, "timed out waiting for the runner");
        }
        wait_ms = static_cast<int>(left.count());
      }
      pollfd pfd{from_child, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, wait_ms);
      if (pr < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kIo, std::string("poll: ") + std::strerror(errno));
      }
      if (pr == 0) continue;  // deadline re-checked above
      char buf[4096];
      const ssize_t n = ::read(from_child, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR) continue;
        fail(ErrorCode::kIo, std::string("read: ") + std::strerror(errno));
      }
      if (n == 0) {
        dead = true;
        reap(std::chrono::milliseconds(500));
        fail_with_stderr(ErrorCode::kRunnerExited, "runner exited unexpectedly");
      }
      pending.append(buf, static_cast<std::size_t>(n));
    }
  }

  void write_line(const std::string& line) {
    if (dead) fail_with_stderr(ErrorCode::kRunnerExited, "runner is no longer running");
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_child, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        dead = true;
        reap(std::chrono::milliseconds(500));
        fail_with_stderr(ErrorCode::kRunnerExited, "runner closed its input");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void handshake() {
    const std::string line =
        read_line(options.handshake_timeout, ErrorCode::kRunnerHandshakeTimeout);
    json hello;
    try {
      hello = json::parse(line);
    } catch (const json::exception&) {
      fail_with_stderr(ErrorCode::kRunnerMalformedReply, "handshake is not JSON: " + line);
    }
    if (!hello.is_object() || !hello.contains("protocol") || !hello["protocol"].is_string()) {
      fail_with_stderr(ErrorCode::kRunnerMalformedReply, "handshake lacks a protocol field");
    }
    info.protocol = hello["protocol"].get<std::string>();
    if (info.protocol != kRunnerProtocol) {
      fail_with_stderr(ErrorCode::kRunnerProtocolMismatch,
                       "runner speaks '" + info.protocol + "', expected '" + kRunnerProtocol + "'");
    }
    try {
      info.layers = hello.at("layers").get<std::vector<std::string>>();
      info.n_classes = hello.at("n_k").get<std::size_t>();
      if (hello.contains("input_normalization")) {
        info.input_normalization = hello["input_normalization"].dump();
      }
    } catch (const json::exception& e) {
      fail_with_stderr(ErrorCode::kRunnerMalformedReply, std::string("bad handshake: ") + e.what());
    }
  }

  // Sends one request and returns the reply's name -> tensor map.
  std::map<std::string, Tensor> request(const std::string& kind,
                                        std::span<const Tensor> images,
                                        const std::vector<std::string>& layers) {
    const fs::path req_dir = work_dir / ("req" + std::to_string(request_id++));
    fs::create_directories(req_dir);
    struct Cleanup {
      fs::path dir;
      ~Cleanup() {
        std::error_code ec;
        fs::remove_all(dir, ec);
      }
    } cleanup{req_dir};

    std::vector<std::string> paths;
    for (std::size_t i = 0; i < images.size(); ++i) {
      const auto p = req_dir / ("input" + std::to_string(i) + ".ltns");
      save_tensor(images[i], p);
      paths.push_back(p.string());
    }
    json req{{"kind", kind}, {"images", paths}, {"out_dir", (req_dir / "out").string()}};
    if (!layers.empty()) req["layers"] = layers;
    write_line(req.dump());

    const std::string line = read_line(options.request_timeout, ErrorCode::kRunnerFailed);
    json reply;
    try {
      reply = json::parse(line);
    } catch (const json::exception&) {
      fail_with_stderr(ErrorCode::kRunnerMalformedReply, "reply is not JSON: " + line);
    }
    if (!reply.is_object() || !reply.contains("ok") || !reply["ok"].is_boolean()) {
      fail_with_stderr(ErrorCode::kRunnerMalformedReply, "reply lacks an ok field: " + line);
    }
    if (!reply["ok"].get<bool>()) {
      const std::string msg = reply.value("error", std::string("unspecified error"));
      fail_with_stderr(ErrorCode::kRunnerFailed, "runner rejected " + kind + " request: " + msg);
    }
    if (!reply.contains("tensors") || !reply["tensors"].is_object()) {
      fail_with_stderr(ErrorCode::kRunnerMalformedReply, "reply lacks a tensors map");
    }
    std::map<std::string, Tensor> out;
    for (auto it = reply["tensors"].begin(); it != reply["tensors"].end(); ++it) {
      if (!it.value().is_string()) {
        fail_with_stderr(ErrorCode::kRunnerMalformedReply, "tensor path for " + it.key() +
                                                               " is not a string");
      }
      try {
        out.emplace(it.key(), load_tensor(it.value().get<std::string>()));
      } catch (const Error& e) {
        fail_with_stderr(ErrorCode::kRunnerMalformedReply,
                         "tensor " + it.key() + ": " + e.what());
      }
    }
    return out;
  }

  void reap(std::chrono::milliseconds grace) {
    if (pid <= 0) return;
    const auto deadline = std::chrono::steady_clock::now() + grace;
    for (;;) {
      int status = 0;
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid || r < 0) {
        pid = -1;
        return;
      }
      if (std::chrono::steady_clock::now() >= deadline) break;
      ::usleep(10000);
    }
    ::kill(pid, SIGKILL);
    ::waitpid(pid, nullptr, 0);
    pid = -1;
  }

  void shutdown() {
    if (to_child >= 0) ::close(to_child);
    to_child = -1;
    reap(std::chrono::milliseconds(2000));
    if (from_child >= 0) ::close(from_child);
    from_child = -1;
    if (owns_work_dir) {
      std::error_code ec;
      fs::remove_all(work_dir, ec);
      owns_work_dir = false;
    }
  }
};

SubprocessRunner::SubprocessRunner(SubprocessOptions options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  impl_->start();
}

SubprocessRunner::~SubprocessRunner() = default;

const RunnerInfo& SubprocessRunner::info() const { return impl_->info; }

std::string SubprocessRunner::stderr_text() const { return impl_->stderr_text(); }

namespace {

const Tensor& expect(const std::map<std::string, Tensor>& m, const std::string& name) {
  auto it = m.find(name);
  if (it == m.end()) fail(ErrorCode::kRunnerMalformedReply, "reply lacks tensor '" + name + "'");
  return it->second;
}

}  // namespace

std::vector<std::vector<Tensor>> SubprocessRunner::do_activations(
    std::span<const Tensor> images, const std::vector<std::string>& layer_ids) {
  auto tensors = impl_->request("activations", images, layer_ids);
  std::vector<std::vector<Tensor>> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    for (const auto& id : layer_ids) out[i].push_back(expect(tensors, std::to_string(i) + "/" + id));
  }
  return out;
}

std::vector<std::vector<float>> SubprocessRunner::do_logits(std::span<const Tensor> images) {
  auto tensors = impl_->request("logits", images, {});
  std::vector<std::vector<float>> out;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto d = expect(tensors, std::to_string(i) + "/logits").data();
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

std::vector<GradResult> SubprocessRunner::do_grad_g(std::span<const Tensor> images) {
  auto tensors = impl_->request("grad_g", images, {});
  std::vector<GradResult> out(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    out[i].g = expect(tensors, std::to_string(i) + "/g").data()[0];
    auto it = tensors.find(std::to_string(i) + "/grad");
    if (it != tensors.end()) {
      out[i].grad = std::move(it->second);
    } else if (out[i].g != 0.0) {
      fail(ErrorCode::kRunnerMalformedReply, "reply has g != 0 but no gradient for image " +
                                                 std::to_string(i));
    }
  }
  return out;
}

}  // namespace ladc
