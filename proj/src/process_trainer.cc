#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>

#include "driftforge/error.h"
#include "driftforge/trainer.h"
#include "json.hpp"

namespace driftforge {

using nlohmann::json;

namespace {

json request_docs(const std::vector<Document>& docs) {
  json arr = json::array();
  for (const auto& d : docs) arr.push_back({{"id", d.id}, {"text", d.text}});
  return arr;
}

json parse_reply(const std::string& line) {
  json reply;
  try {
    reply = json::parse(line);
  } catch (const json::parse_error& e) {
    throw TrainerError(std::string("malformed trainer reply: ") + e.what());
  }
  if (!reply.is_object()) throw TrainerError("trainer reply is not an object");
  if (reply.contains("error")) {
    const auto& err = reply["error"];
    throw TrainerError("trainer error: " + (err.is_string() ? err.get<std::string>() : err.dump()));
  }
  return reply;
}

}  // namespace

ProcessTrainer::ProcessTrainer(const std::string& command, std::string work_dir)
    : work_dir_(std::move(work_dir)) {
  // A dead child must surface as EPIPE, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
  std::filesystem::create_directories(work_dir_);
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) throw TrainerError("pipe failed: " + std::string(std::strerror(errno)));
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw TrainerError("pipe failed: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw TrainerError("fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);

  const json info = parse_reply(call(json{{"op", "info"}}.dump()));
  try {
    labels_ = info.at("labels").get<std::vector<std::string>>();
    handle_.version = info.at("version").get<std::uint64_t>();
    handle_.model = info.value("model", std::string("process"));
  } catch (const json::exception& e) {
    throw TrainerError(std::string("bad info reply: ") + e.what());
  }
}

ProcessTrainer::~ProcessTrainer() {
  if (to_child_ >= 0) {
    try {
      call(json{{"op", "shutdown"}}.dump());
    } catch (const std::exception&) {
      // The child may already be gone.
    }
    ::close(to_child_);
  }
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

std::string ProcessTrainer::call(const std::string& request_line) {
  std::string payload = request_line + "\n";
  std::size_t off = 0;
  while (off < payload.size()) {
    const ssize_t w = ::write(to_child_, payload.data() + off, payload.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw TrainerError("trainer process is not accepting requests: " +
                         std::string(std::strerror(errno)));
    }
    off += static_cast<std::size_t>(w);
  }
  char buf[65536];
  while (true) {
    const auto nl = read_buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      return line;
    }
    const ssize_t r = ::read(from_child_, buf, sizeof buf);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw TrainerError("reading trainer reply failed: " + std::string(std::strerror(errno)));
    }
    if (r == 0) throw TrainerError("trainer process exited before replying");
    read_buffer_.append(buf, static_cast<std::size_t>(r));
  }
}

EncodeResult ProcessTrainer::encode(const std::vector<Document>& docs) {
  const json req{{"op", "encode"}, {"docs", request_docs(docs)}, {"out_dir", work_dir_}};
  const json reply = parse_reply(call(req.dump()));
  std::string emb_path;
  std::string lgt_path;
  try {
    emb_path = reply.at("embeddings").get<std::string>();
    lgt_path = reply.at("logits").get<std::string>();
  } catch (const json::exception& e) {
    throw TrainerError(std::string("bad encode reply: ") + e.what());
  }
  EncodeResult out{read_embeddings(emb_path), read_logits(lgt_path)};
  if (out.embeddings.rows() != docs.size() || out.logits.rows() != docs.size()) {
    throw TrainerError("trainer encoded a different number of documents than requested");
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (out.embeddings.ids()[i] != docs[i].id || out.logits.ids()[i] != docs[i].id) {
      throw TrainerError("trainer returned rows out of order");
    }
  }
  if (out.logits.labels() != labels_.size()) {
    throw TrainerError("trainer logits do not match its label vocabulary");
  }
  return out;
}

ModelHandle ProcessTrainer::update(const AugmentedBatch& batch) {
  const std::string path =
      (std::filesystem::path(work_dir_) / ("batch_" + std::to_string(++request_counter_) + ".jsonl"))
          .string();
  write_binary_file(path, batch_to_jsonl(batch));
  const json reply = parse_reply(call(json{{"op", "update"}, {"batch_path", path}}.dump()));
  try {
    handle_.version = reply.at("version").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw TrainerError(std::string("bad update reply: ") + e.what());
  }
  return handle_;
}

IdMatrix ProcessTrainer::predict(const std::vector<Document>& docs) {
  const json reply =
      parse_reply(call(json{{"op", "predict"}, {"docs", request_docs(docs)}}.dump()));
  std::vector<std::string> ids;
  std::vector<float> values;
  try {
    for (const auto& p : reply.at("predictions")) {
      ids.push_back(p.at("id").get<std::string>());
      const auto probs = p.at("probs").get<std::vector<float>>();
      if (probs.size() != labels_.size()) {
        throw TrainerError("prediction width does not match the label vocabulary");
      }
      values.insert(values.end(), probs.begin(), probs.end());
    }
  } catch (const json::exception& e) {
    throw TrainerError(std::string("bad predict reply: ") + e.what());
  }
  if (ids.size() != docs.size()) throw TrainerError("trainer predicted a different number of documents");
  return IdMatrix(std::move(ids), labels_.size(), std::move(values));
}

}  // namespace driftforge
