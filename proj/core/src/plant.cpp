#include "vmsid/plant.hpp"

#include <csignal>
#include <cstring>
#include <sys/wait.h>
#include <unistd.h>

#include <sstream>
#include <vector>

#include "vmsid/errors.hpp"

namespace vmsid {

SimulatedPlant::SimulatedPlant(StateSpaceModel model, Vec x0, NoiseSpec noise, Rng v_rng, Rng w_rng)
    : model_(std::move(model)), x_(std::move(x0)), noise_(noise), v_rng_(v_rng), w_rng_(w_rng) {
  model_.validate();
  if (x_.size() != model_.m()) throw ConfigError("plant: x0 does not match the model order");
}

Vec SimulatedPlant::measure() {
  if (!y_) {
    Vec y = model_.C * x_;
    for (int i = 0; i < y.size(); ++i) y(i) += sample_noise(noise_, noise_.w_M, w_rng_);
    y_ = y;
  }
  return *y_;
}

void SimulatedPlant::apply(const Vec& u) {
  if (u.size() != model_.p()) throw ConfigError("plant: input has the wrong size");
  measure();
  Vec v(model_.p());
  for (int i = 0; i < v.size(); ++i) v(i) = sample_noise(noise_, noise_.delta, v_rng_);
  x_ = model_.A * x_ + model_.B * (u + v);
  y_.reset();
}

ProcessPlant::ProcessPlant(const std::string& command, int n, int p) : n_(n), p_(p) {
  if (n < 1 || p < 1) throw ConfigError("process plant: sizes must be positive");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw NumericError(std::string("process plant: pipe failed: ") + std::strerror(errno));
  std::signal(SIGPIPE, SIG_IGN);
  pid_ = fork();
  if (pid_ < 0) throw NumericError("process plant: fork failed");
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_ = fdopen(in_pipe[1], "w");
  from_ = fdopen(out_pipe[0], "r");
}

ProcessPlant::~ProcessPlant() {
  if (to_) std::fclose(to_);
  if (from_) std::fclose(from_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

Vec ProcessPlant::measure() {
  if (y_) return *y_;
  std::vector<char> buf(4096);
  std::string line;
  while (true) {
    if (!std::fgets(buf.data(), static_cast<int>(buf.size()), from_))
      throw NumericError("process plant: plant process closed its output");
    line += buf.data();
    if (!line.empty() && line.back() == '\n') break;
  }
  std::istringstream is(line);
  Vec y(n_);
  for (int i = 0; i < n_; ++i)
    if (!(is >> y(i))) throw NumericError("process plant: malformed output line: " + line);
  y_ = y;
  return y;
}

void ProcessPlant::apply(const Vec& u) {
  if (u.size() != p_) throw ConfigError("process plant: input has the wrong size");
  measure();
  for (int i = 0; i < p_; ++i) std::fprintf(to_, i ? " %.17g" : "%.17g", u(i));
  std::fputc('\n', to_);
  if (std::fflush(to_) != 0) throw NumericError("process plant: plant process closed its input");
  y_.reset();
}

}  // namespace vmsid
