#include "evdvsr/error.hpp"
#include "evdvsr/nn/layers.hpp"
#include "support/gradcheck.hpp"

#include "support/torch_doctest.hpp"

using namespace evdvsr;
using namespace evdvsr::nn;
namespace F = torch::nn::functional;

namespace {

bool bitwise_equal(const torch::Tensor& a, const torch::Tensor& b) { return a.sizes() == b.sizes() && torch::equal(a, b); }

double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) { return (a - b).abs().max().item<double>(); }

// Flow whose entries avoid integers, so finite differences never straddle a bilinear kink.
torch::Tensor fractional_flow(int64_t n, int64_t h, int64_t w) {
    return torch::rand({n, 2, h, w}, torch::kDouble) * 1.6 - 0.8 + 0.05;
}

}  // namespace

TEST_SUITE("sampling") {
    TEST_CASE("zero flow is an exact identity") {
        torch::manual_seed(1);
        const auto f = torch::randn({2, 5, 7, 9});
        CHECK(bitwise_equal(backward_warp(f, torch::zeros({2, 2, 7, 9})), f));
    }

    TEST_CASE("integer flow shifts with border replication") {
        torch::manual_seed(2);
        const auto f = torch::randn({1, 1, 4, 5});
        auto flow = torch::zeros({1, 2, 4, 5});
        flow.select(1, 0).fill_(1.0);
        const auto out = backward_warp(f, flow);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x)
                CHECK(out[0][0][y][x].item<float>() == f[0][0][y][std::min(x + 1, 4)].item<float>());
    }

    TEST_CASE("warp gradients match finite differences") {
        torch::manual_seed(3);
        const auto feature = torch::randn({1, 1, 4, 4}, torch::kDouble);
        const auto flow = fractional_flow(1, 4, 4);
        const auto weights = torch::randn({1, 1, 4, 4}, torch::kDouble);
        const auto errors = oracle::gradient_errors(
            [&](const std::vector<torch::Tensor>& in) { return (backward_warp(in[0], in[1]) * weights).sum(); },
            {feature, flow});
        CHECK(errors[0] < 1e-3);
        CHECK(errors[1] < 1e-3);
    }

    TEST_CASE("flow shape mismatch") {
        CHECK_THROWS_AS(backward_warp(torch::zeros({1, 3, 4, 4}), torch::zeros({1, 2, 4, 5})), InvalidInput);
    }
}

TEST_SUITE("pixel shuffle") {
    TEST_CASE("matches the reference layout and shape law") {
        torch::manual_seed(4);
        const auto x = torch::randn({2, 3 * 4, 5, 6});
        const auto y = pixel_shuffle(x, 2);
        CHECK(y.sizes() == torch::IntArrayRef({2, 3, 10, 12}));
        CHECK(bitwise_equal(y, F::pixel_shuffle(x, F::PixelShuffleFuncOptions(2))));
        CHECK_THROWS_AS(pixel_shuffle(torch::zeros({1, 6, 2, 2}), 2), InvalidInput);
    }
}

TEST_SUITE("deformable convolution") {
    TEST_CASE("zero offsets and unit modulation reproduce a standard convolution") {
        torch::manual_seed(5);
        for (int groups : {1, 2, 4}) {
            const auto x = torch::randn({2, 8, 6, 7});
            const auto w = torch::randn({5, 8, 3, 3});
            const auto b = torch::randn({5});
            const auto out = deform_conv3x3(x, torch::zeros({2, groups * 18, 6, 7}), torch::ones({2, groups * 9, 6, 7}), w,
                                            b, groups);
            const auto ref = F::conv2d(x, w, F::Conv2dFuncOptions().bias(b).padding(1));
            CHECK(max_abs_diff(out, ref) < 1e-5);
        }
    }

    TEST_CASE("a whole-pixel offset equals convolving the shifted input") {
        torch::manual_seed(6);
        const auto x = torch::randn({1, 4, 6, 6});
        const auto w = torch::randn({3, 4, 3, 3});
        auto offsets = torch::zeros({1, 18, 6, 6});
        offsets.view({1, 1, 9, 2, 6, 6}).select(3, 1).fill_(1.0);  // every tap samples one row below
        const auto out = deform_conv3x3(x, offsets, torch::ones({1, 9, 6, 6}), w, torch::zeros({3}), 1);
        const auto shifted = F::pad(x.narrow(2, 1, 5), F::PadFuncOptions({0, 0, 0, 1}));
        const auto ref = F::conv2d(shifted, w, F::Conv2dFuncOptions().padding(1));
        // row 0 differs: its top taps read image row 0 where the shifted copy reads padding
        CHECK(max_abs_diff(out.narrow(2, 1, 5), ref.narrow(2, 1, 5)) < 1e-5);
    }
}

TEST_SUITE("feature extractor") {
    TEST_CASE("shapes and channel check") {
        FeatureExtractor fx(3, 16, 2);
        CHECK(fx(torch::zeros({1, 3, 64, 64})).sizes() == torch::IntArrayRef({1, 16, 64, 64}));
        CHECK_THROWS_AS(fx(torch::zeros({1, 5, 8, 8})), InvalidInput);
    }

    TEST_CASE("zero input with zero residual scales gives the stem response to zero") {
        FeatureExtractor fx(5, 8, 3);
        {
            torch::NoGradGuard guard;
            for (auto& item : fx->named_parameters())
                if (item.key().find("scale") != std::string::npos) item.value().zero_();
        }
        const auto out = fx(torch::zeros({1, 5, 6, 6}));
        const auto stem = leaky(fx->stem(torch::zeros({1, 5, 6, 6})));
        CHECK(bitwise_equal(out, stem));
    }

    TEST_CASE("input gradient matches finite differences") {
        torch::manual_seed(7);
        FeatureExtractor fx(3, 4, 2);
        fx->to(torch::kDouble);
        const auto w = torch::randn({1, 4, 8, 8}, torch::kDouble);
        const auto errors = oracle::gradient_errors(
            [&](const std::vector<torch::Tensor>& in) { return (fx(in[0]) * w).sum(); },
            {torch::randn({1, 3, 8, 8}, torch::kDouble)});
        CHECK(errors[0] < 1e-3);
    }
}

TEST_SUITE("channel attention block") {
    TEST_CASE("identity at initialization") {
        torch::manual_seed(8);
        ChannelAttentionBlock cab(16, 4);
        const auto f = torch::randn({2, 16, 5, 5});
        CHECK(bitwise_equal(cab(f), f));
    }

    TEST_CASE("attention rows sum to one") {
        torch::manual_seed(9);
        ChannelAttentionBlock cab(16, 4);
        oracle::perturb_parameters(*cab, 0.5, 10);
        torch::Tensor attn;
        cab->forward(torch::randn({2, 16, 6, 6}), &attn);
        CHECK(attn.sizes() == torch::IntArrayRef({2, 4, 4, 4}));
        CHECK(max_abs_diff(attn.sum(-1), torch::ones({2, 4, 4})) < 1e-6);
    }

    TEST_CASE("spatial permutation equivariance") {
        torch::manual_seed(11);
        ChannelAttentionBlock cab(8, 2);
        oracle::perturb_parameters(*cab, 0.5, 12);
        cab->to(torch::kDouble);
        const auto f = torch::randn({1, 8, 4, 4}, torch::kDouble);
        const auto perm = torch::randperm(16);
        const auto permute = [&](const torch::Tensor& t) { return t.reshape({1, 8, 16}).index_select(2, perm).reshape({1, 8, 4, 4}); };
        CHECK(max_abs_diff(cab(permute(f)), permute(cab(f))) < 1e-12);
    }

    TEST_CASE("gradient matches finite differences") {
        torch::manual_seed(13);
        ChannelAttentionBlock cab(4, 2);
        oracle::perturb_parameters(*cab, 0.5, 14);
        cab->to(torch::kDouble);
        const auto w = torch::randn({1, 4, 4, 4}, torch::kDouble);
        const auto errors = oracle::gradient_errors(
            [&](const std::vector<torch::Tensor>& in) { return (cab(in[0]) * w).sum(); },
            {torch::randn({1, 4, 4, 4}, torch::kDouble)});
        CHECK(errors[0] < 1e-3);
    }
}

TEST_SUITE("cross-modal attention") {
    TEST_CASE("identity at initialization") {
        torch::manual_seed(15);
        CrossModalAttention xa(16, 4, 2);
        const auto q = torch::randn({1, 16, 6, 6}), kv = torch::randn({1, 16, 6, 6});
        CHECK(bitwise_equal(xa(q, kv), q));
    }

    TEST_CASE("softmax rows sum to one and shapes are checked") {
        torch::manual_seed(16);
        CrossModalAttention xa(8, 2, 2);
        oracle::perturb_parameters(*xa, 0.5, 17);
        torch::Tensor attn;
        xa->forward(torch::randn({3, 8, 5, 5}), torch::randn({3, 8, 5, 5}), &attn);
        CHECK(max_abs_diff(attn.sum(-1), torch::ones({3, 2, 4})) < 1e-6);
        CHECK_THROWS_AS(xa(torch::zeros({1, 8, 4, 4}), torch::zeros({1, 8, 4, 5})), InvalidInput);
    }

    TEST_CASE("gradients with respect to both inputs match finite differences") {
        torch::manual_seed(18);
        CrossModalAttention xa(2, 1, 2);
        oracle::perturb_parameters(*xa, 0.5, 19);
        xa->to(torch::kDouble);
        const auto w = torch::randn({1, 2, 4, 4}, torch::kDouble);
        const auto errors = oracle::gradient_errors(
            [&](const std::vector<torch::Tensor>& in) { return (xa(in[0], in[1]) * w).sum(); },
            {torch::randn({1, 2, 4, 4}, torch::kDouble), torch::randn({1, 2, 4, 4}, torch::kDouble)});
        CHECK(errors[0] < 1e-3);
        CHECK(errors[1] < 1e-3);
    }
}

TEST_SUITE("rfd") {
    TEST_CASE("zero event feature leaves the frame feature untouched at initialization") {
        torch::manual_seed(20);
        for (bool e2i_first : {false, true}) {
            Rfd rfd(16, 4, 2, e2i_first, true);
            const auto fi = torch::randn({2, 16, 6, 6});
            const auto out = rfd(fi, torch::zeros_like(fi));
            CHECK(bitwise_equal(out.frame, fi));
            CHECK(out.event.sizes() == fi.sizes());
        }
    }

    TEST_CASE("disabling the image-to-event pathway changes trained outputs") {
        torch::manual_seed(21);
        Rfd with(8, 2, 2, false, true), without(8, 2, 2, false, false);
        oracle::perturb_parameters(*with, 0.3, 22);
        {
            torch::NoGradGuard guard;
            auto src = with->named_parameters();
            for (auto& item : without->named_parameters()) item.value().copy_(src[item.key()]);
        }
        const auto fi = torch::randn({1, 8, 6, 6}), fe = torch::randn({1, 8, 6, 6});
        CHECK(max_abs_diff(with(fi, fe).frame, without(fi, fe).frame) > 1e-4);
        CHECK(bitwise_equal(without(fi, fe).event, without->cab_event(fe)));
    }
}

TEST_SUITE("flow estimator") {
    TEST_CASE("zero flow at initialization and shape checks") {
        torch::manual_seed(23);
        FlowEstimator flow(8);
        const auto a = torch::rand({2, 3, 12, 16});
        const auto f = flow(a, a);
        CHECK(f.sizes() == torch::IntArrayRef({2, 2, 12, 16}));
        CHECK(f.abs().max().item<float>() == 0.0f);
        CHECK_THROWS_AS(flow(a, torch::rand({2, 3, 12, 12})), InvalidInput);
        CHECK_THROWS_AS(flow(torch::rand({1, 3, 10, 12}), torch::rand({1, 3, 10, 12})), InvalidInput);
    }
}

TEST_SUITE("ega") {
    TEST_CASE("scores are distributions over channels") {
        torch::manual_seed(24);
        Ega ega(8);
        oracle::perturb_parameters(*ega, 0.5, 25);
        torch::Tensor scores;
        const auto out = ega->forward(torch::randn({2, 8, 5, 5}), torch::randn({2, 8, 5, 5}), &scores);
        CHECK(out.sizes() == torch::IntArrayRef({2, 8, 5, 5}));
        CHECK(max_abs_diff(scores.sum(1), torch::ones({2, 5, 5})) < 1e-6);
    }

    TEST_CASE("zero event feature with zero-initialized projection is the identity modulation") {
        torch::manual_seed(26);
        Ega ega(16);
        const auto h = torch::randn({1, 16, 4, 4});
        torch::Tensor scores;
        const auto out = ega->forward(h, torch::zeros_like(h), &scores);
        CHECK(max_abs_diff(scores, torch::full_like(scores, 1.0 / 16)) == 0.0);
        CHECK(bitwise_equal(out, h));
        CHECK_THROWS_AS(ega(h, torch::zeros({1, 16, 4, 5})), InvalidInput);
    }
}

TEST_SUITE("hda") {
    HdaOptions options(int c, int g) {
        HdaOptions o;
        o.channels = c;
        o.groups = g;
        return o;
    }

    TEST_CASE("degenerate alignment is a standard convolution of the previous hidden state") {
        torch::manual_seed(27);
        Hda hda(options(8, 2));
        const auto h = torch::randn({1, 8, 6, 6});
        HdaTrace trace;
        const auto out = hda->forward(h, torch::randn({1, 8, 6, 6}), torch::zeros({1, 2, 6, 6}), torch::randn({1, 8, 6, 6}),
                                      torch::randn({1, 8, 6, 6}), &trace);
        CHECK(trace.mask.min().item<float>() == 1.0f);
        CHECK(trace.mask.max().item<float>() == 1.0f);
        CHECK(trace.offsets.abs().max().item<float>() == 0.0f);
        const auto ref = F::conv2d(h, hda->dcn_weight, F::Conv2dFuncOptions().bias(hda->dcn_bias).padding(1));
        CHECK(max_abs_diff(out, ref) < 1e-5);
    }

    TEST_CASE("offsets stay within the clamp around the flow") {
        torch::manual_seed(28);
        auto o = options(8, 2);
        o.offset_clamp = 3.0;
        Hda hda(o);
        {
            torch::NoGradGuard guard;
            hda->cond_out->weight.normal_(0.0, 2.0);
        }
        const auto flow = torch::randn({1, 2, 6, 6}) * 4;
        HdaTrace trace;
        hda->forward(torch::randn({1, 8, 6, 6}), torch::randn({1, 8, 6, 6}), flow, torch::randn({1, 8, 6, 6}),
                     torch::randn({1, 8, 6, 6}), &trace);
        const auto expanded = flow.view({1, 1, 1, 2, 6, 6}).expand({1, 2, 9, 2, 6, 6}).reshape({1, 36, 6, 6});
        const double worst = (trace.offsets - expanded).abs().max().item<double>();
        CHECK(worst <= 3.0);
        CHECK(worst > 2.0);  // the bound is actually exercised
        o.break_clamp = true;
        Hda broken(o);
        {
            torch::NoGradGuard guard;
            auto src = hda->named_parameters();
            for (auto& item : broken->named_parameters()) item.value().copy_(src[item.key()]);
        }
        broken->forward(torch::randn({1, 8, 6, 6}), torch::randn({1, 8, 6, 6}), flow, torch::randn({1, 8, 6, 6}),
                        torch::randn({1, 8, 6, 6}), &trace);
        CHECK((trace.offsets - expanded).abs().max().item<double>() > 3.0);
    }

    TEST_CASE("ablation toggles change the condition pool") {
        for (bool ega : {false, true})
            for (bool fga : {false, true}) {
                auto o = options(8, 2);
                o.use_ega = ega;
                o.use_fga = fga;
                Hda hda(o);
                CHECK(hda->cond1->weight.size(1) == 8 * (2 + ega + fga) + 2);
                const auto out = hda(torch::randn({1, 8, 4, 4}), torch::randn({1, 8, 4, 4}), torch::randn({1, 2, 4, 4}),
                                     torch::randn({1, 8, 4, 4}), torch::randn({1, 8, 4, 4}));
                CHECK(out.sizes() == torch::IntArrayRef({1, 8, 4, 4}));
            }
    }

    TEST_CASE("gradient through the full alignment path matches finite differences") {
        torch::manual_seed(29);
        Hda hda(options(4, 1));
        oracle::perturb_parameters(*hda, 0.2, 30);
        hda->to(torch::kDouble);
        const auto w = torch::randn({1, 4, 4, 4}, torch::kDouble);
        const auto inter = torch::randn({1, 4, 4, 4}, torch::kDouble);
        const auto fe = torch::randn({1, 4, 4, 4}, torch::kDouble), fi = torch::randn({1, 4, 4, 4}, torch::kDouble);
        const auto flow = fractional_flow(1, 4, 4);
        const auto errors = oracle::gradient_errors(
            [&](const std::vector<torch::Tensor>& in) { return (hda(in[0], inter, in[1], fe, fi) * w).sum(); },
            {torch::randn({1, 4, 4, 4}, torch::kDouble), flow});
        CHECK(errors[0] < 1e-3);
        CHECK(errors[1] < 1e-3);
    }

    TEST_CASE("mismatched inputs") {
        Hda hda(options(8, 2));
        CHECK_THROWS_AS(hda(torch::zeros({1, 8, 4, 4}), torch::zeros({1, 8, 4, 4}), torch::zeros({1, 2, 4, 5}),
                            torch::zeros({1, 8, 4, 4}), torch::zeros({1, 8, 4, 4})),
                        InvalidInput);
    }
}

TEST_SUITE("upsampler") {
    TEST_CASE("zero-initialized head outputs an exact zero residual") {
        torch::manual_seed(31);
        for (int s : {2, 4}) {
            Upsampler up(8, s);
            const auto out = up(torch::randn({2, 8, 5, 6}));
            CHECK(out.sizes() == torch::IntArrayRef({2, 3, 5 * s, 6 * s}));
            CHECK(out.abs().max().item<float>() == 0.0f);
        }
        CHECK_THROWS_AS(Upsampler(8, 3), InvalidInput);
    }
}
