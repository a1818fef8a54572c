#include <doctest.h>

#include <cmath>
#include <random>

#include "corpus/synthetic.hpp"
#include "corpus/vocabulary.hpp"
#include "error.hpp"
#include "lm/checkpoint.hpp"
#include "lm/model.hpp"
#include "lm/training.hpp"
#include "lm_oracles.hpp"
#include "test_util.hpp"

using namespace adaptlm;
using namespace adaptlm::lm;

namespace {

HyperParams tiny(std::size_t layers = 2, std::size_t hidden = 5, std::uint64_t seed = 3) {
  HyperParams h;
  h.num_layers = layers;
  h.hidden_size = hidden;
  h.embed_size = 4;
  h.seed = seed;
  return h;
}

// Weights drawn wider than the default init so saturation paths are exercised.
ModelParameters<double> widened(ModelParameters<double> p, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& t : p.tensors)
    for (auto& v : t.values()) v = u(rng);
  return p;
}

}  // namespace

TEST_SUITE("lm") {
  TEST_CASE("forward pass equals the scalar-loop LSTM") {
    for (std::size_t layers : {1u, 2u}) {
      const auto p = widened(init_parameters<double>(tiny(layers), 11), 70 + layers, 0.8);
      std::mt19937_64 rng(4);
      const auto s = testutil::random_sentence(11, 6, rng);
      const auto pass = forward_sentence(p, s, LstmState<double>::zeros(layers, 5));
      const auto oracle = testutil::scalar_loop_target_log_probs(p, s);
      REQUIRE(pass.target_log_probs.size() == 7);
      for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(std::abs(pass.target_log_probs[i] - oracle[i]) < 1e-12);
    }
  }

  TEST_CASE("log-prob rows are normalized and the loss is their mean") {
    const auto p = init_parameters<double>(tiny(), 9);
    const std::vector<TokenId> s{3, 4, 5};
    const auto pass = forward_sentence(p, s, LstmState<double>::zeros(2, 5));
    CHECK(pass.log_probs.rows() == 4);
    for (std::size_t r = 0; r < 4; ++r) {
      double z = 0.0;
      for (std::size_t v = 0; v < 9; ++v) z += std::exp(pass.log_probs(r, v));
      CHECK(z == doctest::Approx(1.0).epsilon(1e-12));
    }
    const double mean = sentence_loss(pass.log_probs, pass.targets, LossReduction::mean);
    const double sum = sentence_loss(pass.log_probs, pass.targets, LossReduction::sum);
    CHECK(pass.tape.value(pass.loss)[0] == doctest::Approx(mean).epsilon(1e-14));
    CHECK(sum == doctest::Approx(4.0 * mean).epsilon(1e-14));
  }

  TEST_CASE("lstm_step matches one step of the taped pass") {
    const auto p = widened(init_parameters<double>(tiny(1), 7), 8, 0.5);
    Tensor<double> x(4, 1);
    for (std::size_t j = 0; j < 4; ++j) x[j] = p.embedding()(kBosId, j);
    const auto [h, next] = lstm_step(p, 0, x, LstmState<double>::zeros(1, 5));
    CHECK(h == next.h[0]);
    CHECK(next.h[0].all_finite());
    CHECK_THROWS_AS(lstm_step(p, 1, x, LstmState<double>::zeros(1, 5)), Error);
    CHECK_THROWS_AS(lstm_step(p, 0, Tensor<double>(3, 1), LstmState<double>::zeros(1, 5)), Error);
  }

  TEST_CASE("analytic gradients match central differences") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 4; ++trial) {
      const auto p = init_parameters<double>(tiny(1 + trial % 2, 3 + trial, 100 + trial), 8 + trial);
      const auto s = testutil::random_sentence(8 + trial, 3 + trial, rng);
      CHECK(testutil::max_gradient_relative_error(p, s) < 1e-4);
    }
  }

  TEST_CASE("carried state changes predictions, zero state reproduces") {
    const auto p = widened(init_parameters<double>(tiny(), 9), 1, 0.6);
    const std::vector<TokenId> s{3, 4};
    const auto a = forward_sentence(p, s, LstmState<double>::zeros(2, 5));
    const auto b = forward_sentence(p, s, a.final_state);
    const auto c = forward_sentence(p, s, LstmState<double>::zeros(2, 5));
    CHECK(a.target_log_probs == c.target_log_probs);
    CHECK(a.target_log_probs != b.target_log_probs);
  }

  TEST_CASE("out-of-range tokens and empty sentences are rejected") {
    const auto p = init_parameters<double>(tiny(), 9);
    CHECK_THROWS_AS(forward_sentence(p, std::vector<TokenId>{3, 9}, LstmState<double>::zeros(2, 5)), Error);
    CHECK_THROWS_AS(forward_sentence(p, std::vector<TokenId>{}, LstmState<double>::zeros(2, 5)), Error);
    CHECK_THROWS_AS(init_parameters<double>(tiny(), 3), Error);
  }

  TEST_CASE("sgd_step arithmetic") {
    ModelParameters<double> p = init_parameters<double>(tiny(1, 1), 4);
    for (auto& t : p.tensors) t.fill(1.0);
    auto grads = p.tensors;
    for (auto& g : grads) g.fill(0.1);
    SUBCASE("plain step") {
      const auto r = sgd_step(p, grads, 20.0, std::nullopt);
      CHECK(p.tensors[0][0] == doctest::Approx(-1.0).epsilon(1e-14));
      CHECK_FALSE(r.clipped);
    }
    SUBCASE("lr 0 is a no-op") {
      const auto before = p;
      sgd_step(p, grads, 0.0, std::nullopt);
      CHECK(p == before);
    }
    SUBCASE("global-norm clipping") {
      double sq = 0.0;
      for (auto& g : grads) sq += squared_norm(g);
      // Rescale so the global norm is exactly 10.
      for (auto& g : grads)
        for (auto& v : g.values()) v *= 10.0 / std::sqrt(sq);
      const double g0 = grads[0][0];
      const auto r = sgd_step(p, grads, 1.0, 1.0);
      CHECK(r.clipped);
      CHECK(r.grad_norm == doctest::Approx(10.0));
      CHECK(r.clip_scale == doctest::Approx(0.1));
      CHECK(p.tensors[0][0] == doctest::Approx(1.0 - g0 / 10.0).epsilon(1e-12));
    }
    SUBCASE("non-finite gradient without clipping is applied and flagged") {
      grads[0][0] = std::numeric_limits<double>::infinity();
      const auto r = sgd_step(p, grads, 1.0, std::nullopt);
      CHECK(r.non_finite_gradient);
      CHECK(r.non_finite_weights);
    }
    SUBCASE("two half steps equal one full step") {
      // Dyadic values make every intermediate exact, so equality is bitwise.
      for (auto& t : p.tensors) t.fill(0.75);
      for (auto& g : grads) g.fill(0.125);
      auto halves = p;
      sgd_step(p, grads, 0.5, std::nullopt);
      sgd_step(halves, grads, 0.25, std::nullopt);
      sgd_step(halves, grads, 0.25, std::nullopt);
      CHECK(halves == p);
      // With arbitrary values the two paths round differently by at most a few ulps.
      std::mt19937_64 rng(4);
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (auto& t : p.tensors)
        for (auto& v : t.values()) v = u(rng);
      for (auto& g : grads)
        for (auto& v : g.values()) v = u(rng);
      halves = p;
      sgd_step(p, grads, 0.3, std::nullopt);
      sgd_step(halves, grads, 0.15, std::nullopt);
      sgd_step(halves, grads, 0.15, std::nullopt);
      for (std::size_t t = 0; t < p.tensors.size(); ++t)
        for (std::size_t i = 0; i < p.tensors[t].size(); ++i)
          CHECK(std::abs(halves.tensors[t][i] - p.tensors[t][i]) <= 1e-15 * 4);
    }
    SUBCASE("gradient count mismatch") {
      grads.pop_back();
      CHECK_THROWS_AS(sgd_step(p, grads, 1.0, std::nullopt), Error);
    }
  }

  TEST_CASE("hyperparameter validation names the field") {
    HyperParams h;
    h.dropout_rate = 1.0;
    try {
      h.validate();
      FAIL("expected usage error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::usage);
      CHECK(std::string(e.what()).find("dropout_rate") != std::string::npos);
    }
    h = HyperParams{};
    h.clip_norm = -1.0;
    CHECK_THROWS_AS(h.validate(), Error);
  }

  TEST_CASE("training is deterministic and logs monotone best perplexity") {
    const auto corpus = corpus::background_corpus(300, 5, 50);
    const auto vocab = corpus::Vocabulary::build(corpus.all_sentences(), 1);
    const auto ids = vocab.encode_all(corpus.all_sentences());
    std::vector<Sentence> train(ids.begin(), ids.begin() + 250), valid(ids.begin() + 250, ids.end());
    HyperParams h = tiny(1, 8, 9);
    h.embed_size = 8;
    TrainOptions o;
    o.epochs = 3;
    const auto a = train_base_model<double>(train, valid, vocab.size(), h, o);
    const auto b = train_base_model<double>(train, valid, vocab.size(), h, o);
    CHECK(a.params == b.params);
    double prev = a.log.initial_valid_perplexity;
    for (const auto& e : a.log.epochs) {
      CHECK(e.best_valid_perplexity <= prev);
      prev = e.best_valid_perplexity;
    }
    CHECK(prev < a.log.initial_valid_perplexity);
    CHECK(corpus_perplexity(a.params, valid) == doctest::Approx(prev).epsilon(1e-12));
  }

  TEST_CASE("checkpoint round trip is bit-exact in both precisions") {
    testutil::TempDir dir;
    Fingerprint fp{};
    fp[0] = 7;
    auto roundtrip = [&](auto tag) {
      using Real = decltype(tag);
      Checkpoint<Real> ck;
      ck.hyper = tiny();
      ck.vocab_fingerprint = fp;
      ck.metadata = {3, 1.25};
      ck.params = init_parameters<Real>(ck.hyper, 10);
      const auto path = dir / ("m" + std::to_string(sizeof(Real)) + ".ckpt");
      save_checkpoint(ck, path);
      const auto back = load_checkpoint<Real>(path, fp);
      CHECK(back.params == ck.params);
      CHECK(back.hyper == ck.hyper);
      CHECK(back.metadata == ck.metadata);
      CHECK(peek_checkpoint(path).scalar_bytes == sizeof(Real));
      const auto first = testutil::slurp(path);
      save_checkpoint(back, path);
      CHECK(testutil::slurp(path) == first);
    };
    roundtrip(float{});
    roundtrip(double{});
  }

  TEST_CASE("a float checkpoint loads widened into double") {
    testutil::TempDir dir;
    Checkpoint<float> ck;
    ck.hyper = tiny();
    ck.params = init_parameters<float>(ck.hyper, 10);
    save_checkpoint(ck, dir / "m.ckpt");
    const auto d = load_checkpoint<double>(dir / "m.ckpt");
    for (std::size_t t = 0; t < ck.params.tensors.size(); ++t)
      for (std::size_t i = 0; i < ck.params.tensors[t].size(); ++i)
        CHECK(d.params.tensors[t][i] == static_cast<double>(ck.params.tensors[t][i]));
  }

  TEST_CASE("checkpoint corruption and mismatches are rejected") {
    testutil::TempDir dir;
    Checkpoint<double> ck;
    ck.hyper = tiny();
    ck.params = init_parameters<double>(ck.hyper, 10);
    const auto path = dir / "m.ckpt";
    save_checkpoint(ck, path);
    const auto bytes = testutil::slurp(path);

    SUBCASE("flipped byte") {
      auto bad = bytes;
      bad[bytes.size() / 2] ^= 0x01;
      testutil::spit(path, bad);
      CHECK_THROWS_AS(load_checkpoint<double>(path), Error);
    }
    SUBCASE("truncated") {
      testutil::spit(path, bytes.substr(0, bytes.size() - 20));
      CHECK_THROWS_AS(load_checkpoint<double>(path), Error);
    }
    SUBCASE("wrong magic") {
      auto bad = bytes;
      bad[0] = 'X';
      testutil::spit(path, bad);
      CHECK_THROWS_AS(load_checkpoint<double>(path), Error);
    }
    SUBCASE("vocabulary fingerprint mismatch names both") {
      Fingerprint other{};
      other[31] = 1;
      try {
        load_checkpoint<double>(path, other);
        FAIL("expected a format error");
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::format);
        const std::string msg = e.what();
        CHECK(msg.find(to_hex(other)) != std::string::npos);
        CHECK(msg.find(to_hex(Fingerprint{})) != std::string::npos);
      }
    }
    SUBCASE("missing file") { CHECK_THROWS_AS(load_checkpoint<double>(dir / "none.ckpt"), Error); }
  }
}
