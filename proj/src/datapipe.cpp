// Copyright 2026 The VeriFrame Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "veriframe/datapipe.hpp"

#include <algorithm>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "veriframe/error.hpp"

namespace veriframe {

std::vector<double> preprocess_sample(const Image& crop, int target_size) {
  if (crop.empty()) throw DecodeError("empty crop");
  if (target_size < 1) throw InvalidArgument("target size must be >= 1");
  return resize_to_unit(crop, target_size, target_size);
}

struct BatchStream::State {
  std::filesystem::path root;
  std::vector<IndexRow> rows;
  Split split;
  StreamOptions options;
  SampleLoader loader;
  std::atomic<std::size_t> decodes{0};

  std::mutex cache_mutex;
  std::vector<std::shared_ptr<const std::vector<double>>> cache;

  std::shared_ptr<const std::vector<double>> pixels(std::size_t i) {
    if (options.cache) {
      std::lock_guard lock(cache_mutex);
      if (cache[i]) return cache[i];
    }
    ++decodes;
    auto value = std::make_shared<const std::vector<double>>(
        preprocess_sample(loader(root / rows[i].crop_path), options.target_size));
    if (options.cache) {
      std::lock_guard lock(cache_mutex);
      if (!cache[i]) cache[i] = value;
      return cache[i];
    }
    return value;
  }
};

namespace {

void flip_in_place(std::span<double> pixels, int size) {
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size / 2; ++x) {
      double* a = pixels.data() + (static_cast<std::size_t>(y) * size + x) * 3;
      double* b = pixels.data() + (static_cast<std::size_t>(y) * size + (size - 1 - x)) * 3;
      for (int c = 0; c < 3; ++c) std::swap(a[c], b[c]);
    }
  }
}

}  // namespace

BatchStream::BatchStream(const IndexTable& table, Split split, StreamOptions options,
                         SampleLoader loader)
    : state_(std::make_shared<State>()) {
  if (options.batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (options.target_size < 1) throw InvalidArgument("target size must be >= 1");
  state_->root = table.root;
  state_->rows = table.split_rows(split);
  if (state_->rows.empty()) {
    throw DataError("split '" + std::string(to_string(split)) + "' has no rows");
  }
  state_->split = split;
  state_->options = options;
  state_->loader = loader ? std::move(loader) : SampleLoader(read_image);
  state_->cache.resize(state_->rows.size());
}

std::size_t BatchStream::size() const { return state_->rows.size(); }

std::size_t BatchStream::batches_per_epoch() const {
  return (size() + state_->options.batch_size - 1) / state_->options.batch_size;
}

const StreamOptions& BatchStream::options() const { return state_->options; }
Split BatchStream::split() const { return state_->split; }
std::size_t BatchStream::decode_count() const { return state_->decodes.load(); }

std::vector<std::size_t> BatchStream::order(std::size_t epoch) const {
  std::vector<std::size_t> idx(size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (state_->options.shuffle_seed) {
    std::mt19937_64 rng(*state_->options.shuffle_seed + 0x9E3779B97F4A7C15ULL * epoch);
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  return idx;
}

struct BatchStream::Epoch::Impl {
  std::shared_ptr<State> state;
  std::vector<std::size_t> order;
  std::vector<char> flips;
  std::size_t next_batch = 0;  // next batch index to build
  std::size_t batches = 0;

  // Prefetch machinery (unused when depth == 0).
  std::mutex mutex;
  std::condition_variable cv;
  std::deque<Batch> ready;
  std::size_t delivered = 0;
  std::exception_ptr error;
  bool stop = false;
  bool done = false;
  std::thread producer;

  Batch build(std::size_t b) {
    const auto& opt = state->options;
    const std::size_t begin = b * opt.batch_size;
    const std::size_t end = std::min(order.size(), begin + opt.batch_size);
    const int n = static_cast<int>(end - begin);
    const int s = opt.target_size;
    Batch batch;
    batch.pixels = Tensor({n, s, s, 3});
    batch.labels.resize(static_cast<std::size_t>(n));
    batch.source_ids.resize(static_cast<std::size_t>(n));

    auto map_one = [&](std::size_t k) {
      const std::size_t row = order[begin + k];
      auto pixels = state->pixels(row);
      auto dst = batch.pixels.sample(static_cast<int>(k));
      std::memcpy(dst.data(), pixels->data(), sizeof(double) * dst.size());
      if (flips[begin + k]) flip_in_place(dst, s);
      batch.labels[k] = state->rows[row].label == Label::kFake ? 1.0 : 0.0;
      batch.source_ids[k] = state->rows[row].crop_path;
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(opt.map_workers, static_cast<unsigned>(n)));
    if (workers == 1) {
      for (std::size_t k = 0; k < static_cast<std::size_t>(n); ++k) map_one(k);
    } else {
      std::atomic<std::size_t> next{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
          pool.emplace_back([&] {
            for (std::size_t k = next++; k < static_cast<std::size_t>(n); k = next++) {
              try {
                map_one(k);
              } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
              }
            }
          });
        }
      }
      if (failure) std::rethrow_exception(failure);
    }
    return batch;
  }

  void produce() {
    const std::size_t depth = state->options.prefetch_depth;
    for (std::size_t b = 0; b < batches; ++b) {
      {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return stop || ready.size() < depth; });
        if (stop) return;
      }
      try {
        Batch batch = build(b);
        std::lock_guard lock(mutex);
        ready.push_back(std::move(batch));
      } catch (...) {
        std::lock_guard lock(mutex);
        error = std::current_exception();
        done = true;
        cv.notify_all();
        return;
      }
      cv.notify_all();
    }
    std::lock_guard lock(mutex);
    done = true;
    cv.notify_all();
  }

  ~Impl() {
    {
      std::lock_guard lock(mutex);
      stop = true;
    }
    cv.notify_all();
    if (producer.joinable()) producer.join();
  }
};

BatchStream::Epoch::Epoch(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
BatchStream::Epoch::Epoch(Epoch&&) noexcept = default;
BatchStream::Epoch& BatchStream::Epoch::operator=(Epoch&&) noexcept = default;
BatchStream::Epoch::~Epoch() = default;

std::optional<Batch> BatchStream::Epoch::next() {
  auto& im = *impl_;
  if (im.state->options.prefetch_depth == 0) {
    if (im.next_batch >= im.batches) return std::nullopt;
    return im.build(im.next_batch++);
  }
  std::unique_lock lock(im.mutex);
  im.cv.wait(lock, [&] { return !im.ready.empty() || im.done; });
  if (!im.ready.empty()) {
    Batch batch = std::move(im.ready.front());
    im.ready.pop_front();
    ++im.delivered;
    lock.unlock();
    im.cv.notify_all();
    return batch;
  }
  if (im.error) {
    auto e = im.error;
    im.error = nullptr;
    std::rethrow_exception(e);
  }
  return std::nullopt;
}

BatchStream::Epoch BatchStream::epoch(std::size_t epoch_index) const {
  auto impl = std::make_unique<Epoch::Impl>();
  impl->state = state_;
  impl->order = order(epoch_index);
  impl->batches = batches_per_epoch();
  impl->flips.assign(impl->order.size(), 0);
  const auto& opt = state_->options;
  if (opt.augment && state_->split == Split::kTrain) {
    std::mt19937_64 rng(opt.augment_seed ^ (0xD1B54A32D192ED03ULL * (epoch_index + 1)));
    std::bernoulli_distribution coin(0.5);
    for (auto& f : impl->flips) f = coin(rng) ? 1 : 0;
  }
  if (opt.prefetch_depth > 0) {
    auto* raw = impl.get();
    impl->producer = std::thread([raw] { raw->produce(); });
  }
  return Epoch(std::move(impl));
}

BatchStream build_stream(const IndexTable& table, Split split, const StreamOptions& options,
                         SampleLoader loader) {
  return BatchStream(table, split, options, std::move(loader));
}

}  // namespace veriframe
