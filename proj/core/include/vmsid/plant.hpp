#pragma once

#include <cstdio>
#include <memory>
#include <optional>
#include <string>

#include "vmsid/lti_core.hpp"
#include "vmsid/rng.hpp"

namespace vmsid {

// One step: measure() returns y(k); apply(u) sends u(k) and advances to k+1.
class Plant {
 public:
  virtual ~Plant() = default;
  virtual int n() const = 0;
  virtual int p() const = 0;
  virtual Vec measure() = 0;
  virtual void apply(const Vec& u) = 0;
  virtual std::optional<Vec> true_state() const { return std::nullopt; }
};

class SimulatedPlant : public Plant {
 public:
  SimulatedPlant(StateSpaceModel model, Vec x0, NoiseSpec noise, Rng v_rng, Rng w_rng);

  int n() const override { return model_.n(); }
  int p() const override { return model_.p(); }
  Vec measure() override;
  void apply(const Vec& u) override;
  std::optional<Vec> true_state() const override { return x_; }

 private:
  StateSpaceModel model_;
  Vec x_;
  NoiseSpec noise_;
  Rng v_rng_, w_rng_;
  std::optional<Vec> y_;
};

// External process speaking whitespace-separated text lines: it prints one
// y line, then for every u line it reads it prints the next y line.
class ProcessPlant : public Plant {
 public:
  ProcessPlant(const std::string& command, int n, int p);
  ~ProcessPlant() override;
  ProcessPlant(const ProcessPlant&) = delete;
  ProcessPlant& operator=(const ProcessPlant&) = delete;

  int n() const override { return n_; }
  int p() const override { return p_; }
  Vec measure() override;
  void apply(const Vec& u) override;

 private:
  int n_, p_;
  int pid_ = -1;
  std::FILE* to_ = nullptr;
  std::FILE* from_ = nullptr;
  std::optional<Vec> y_;
};

}  // namespace vmsid
