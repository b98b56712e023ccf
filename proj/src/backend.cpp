#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <csignal>
#include <thread>

#include "asymbpe/error.hpp"
#include "asymbpe/orchestrator.hpp"

extern char** environ;

namespace asymbpe::orchestrator {

namespace {

std::string shell_quote(const std::string& value) {
  std::string out = "'";
  for (char c : value) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

BackendOutcome copy_lines(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::create_directories(to.parent_path(), ec);
  fs::copy_file(from, to, fs::copy_options::overwrite_existing, ec);
  if (ec) return BackendOutcome{1, "copy " + from.string() + " -> " + to.string() + ": " + ec.message()};
  return BackendOutcome{0, {}};
}

}  // namespace

BackendCommand::BackendCommand(std::string command_template, std::chrono::seconds timeout)
    : template_(std::move(command_template)), timeout_(timeout) {
  for (auto name : kPlaceholders) {
    const std::string slot = "{" + std::string(name) + "}";
    const std::size_t n = count_occurrences(template_, slot);
    if (n > 1) throw Error("backend.command: placeholder " + slot + " used more than once");
    if (name == "hyp_out" && n == 0) throw Error("backend.command: placeholder {hyp_out} is required");
  }
  if (timeout_.count() < 0) throw Error("backend.timeout_seconds: must be non-negative");
}

std::string BackendCommand::render(const std::array<std::string, 7>& values) const {
  std::string out;
  std::string_view rest = template_;
  while (!rest.empty()) {
    bool substituted = false;
    if (rest.front() == '{') {
      for (std::size_t i = 0; i < kPlaceholders.size(); ++i) {
        const std::string slot = "{" + std::string(kPlaceholders[i]) + "}";
        if (rest.starts_with(slot)) {
          out += shell_quote(values[i]);
          rest.remove_prefix(slot.size());
          substituted = true;
          break;
        }
      }
    }
    if (!substituted) {
      out.push_back(rest.front());
      rest.remove_prefix(1);
    }
  }
  return out;
}

BackendOutcome EchoReferenceBackend::run(const BackendJob& job) {
  return copy_lines(job.test_tgt_segmented, job.hyp_out);
}

BackendOutcome IdentityCopyBackend::run(const BackendJob& job) { return copy_lines(job.test_src, job.hyp_out); }

BackendOutcome CommandBackend::run(const BackendJob& job) {
  std::error_code ec;
  fs::create_directories(job.model_dir, ec);
  fs::create_directories(job.hyp_out.parent_path(), ec);
  const std::string cmd = command_.render({job.train_src.string(), job.train_tgt.string(), job.valid_src.string(),
                                           job.valid_tgt.string(), job.test_src.string(), job.model_dir.string(),
                                           job.hyp_out.string()});

  std::string sh = "/bin/sh", dash_c = "-c", body = cmd;
  char* argv[] = {sh.data(), dash_c.data(), body.data(), nullptr};
  pid_t pid = 0;
  if (int rc = posix_spawn(&pid, "/bin/sh", nullptr, nullptr, argv, environ); rc != 0) {
    return BackendOutcome{-1, "posix_spawn failed with error " + std::to_string(rc)};
  }

  const auto deadline = std::chrono::steady_clock::now() + command_.timeout();
  int status = 0;
  for (;;) {
    const pid_t done = waitpid(pid, &status, command_.timeout().count() > 0 ? WNOHANG : 0);
    if (done == pid) break;
    if (done < 0) return BackendOutcome{-1, "waitpid failed"};
    if (std::chrono::steady_clock::now() >= deadline) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      return BackendOutcome{-1, "timed out after " + std::to_string(command_.timeout().count()) + " s"};
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  if (WIFEXITED(status)) {
    const int code = WEXITSTATUS(status);
    if (code == 0) return BackendOutcome{0, {}};
    return BackendOutcome{code, "command exited with status " + std::to_string(code)};
  }
  if (WIFSIGNALED(status)) {
    return BackendOutcome{-1, "command killed by signal " + std::to_string(WTERMSIG(status))};
  }
  return BackendOutcome{-1, "command ended abnormally"};
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec) {
  switch (spec.kind) {
    case BackendKind::echo_reference: return std::make_unique<EchoReferenceBackend>();
    case BackendKind::identity_copy: return std::make_unique<IdentityCopyBackend>();
    case BackendKind::command: return std::make_unique<CommandBackend>(spec.command);
  }
  throw Error("unknown backend kind");
}

}  // namespace asymbpe::orchestrator
