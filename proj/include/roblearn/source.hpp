#pragma once

#include <functional>
#include <optional>

#include "roblearn/core.hpp"
#include "roblearn/random.hpp"

namespace roblearn {

// Pull-based stream of labeled samples.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual std::optional<Sample> next() = 0;
  virtual Index dim() const = 0;
};

// Walks a dataset once, in order.
class DatasetSource : public SampleSource {
 public:
  explicit DatasetSource(const Dataset& data) : data_(&data) {}
  std::optional<Sample> next() override {
    if (pos_ >= data_->size()) return std::nullopt;
    return (*data_)[pos_++];
  }
  Index dim() const override { return data_->dim(); }
  std::size_t consumed() const { return pos_; }

 private:
  const Dataset* data_;
  std::size_t pos_ = 0;
};

// Uniform draws with replacement; never runs dry.
class ResamplingSource : public SampleSource {
 public:
  ResamplingSource(const Dataset& data, Rng rng) : data_(&data), rng_(std::move(rng)) {
    if (data.empty()) fail(ErrorCode::EmptyDataset, "ResamplingSource over an empty dataset");
  }
  std::optional<Sample> next() override { return (*data_)[uniform_index(rng_, data_->size())]; }
  Index dim() const override { return data_->dim(); }

 private:
  const Dataset* data_;
  Rng rng_;
};

class FunctionSource : public SampleSource {
 public:
  FunctionSource(Index d, std::function<std::optional<Sample>()> f) : d_(d), f_(std::move(f)) {}
  std::optional<Sample> next() override { return f_(); }
  Index dim() const override { return d_; }

 private:
  Index d_;
  std::function<std::optional<Sample>()> f_;
};

// Replaces every label with a fixed predictor's output.
template <Predictor P>
class RelabeledSource : public SampleSource {
 public:
  RelabeledSource(SampleSource& inner, P labeler) : inner_(&inner), labeler_(std::move(labeler)) {}
  std::optional<Sample> next() override {
    auto s = inner_->next();
    if (s) s->y = labeler_.predict(s->x);
    return s;
  }
  Index dim() const override { return inner_->dim(); }

 private:
  SampleSource* inner_;
  P labeler_;
};

}  // namespace roblearn
