#include <gtest/gtest.h>

#include "freqprice/model.hpp"
#include "freqprice/scenario.hpp"

using namespace freqprice;

namespace {

GeneratorParams gen(double C, double c = 27.4, double lo = 0.0, double hi = 50.0) {
    GeneratorParams g;
    g.quad_cost = C;
    g.lin_cost = c;
    g.p_min = lo;
    g.p_max = hi;
    return g;
}

bool has_error(const std::vector<ValidationError>& errs, const std::string& field, const std::string& text) {
    for (const auto& e : errs)
        if (e.field == field && e.message.find(text) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST(GeneratorCost, Substitution) {
    EXPECT_DOUBLE_EQ(generator_cost(gen(0.01), 0.0), 0.0);
    EXPECT_DOUBLE_EQ(generator_cost(gen(0.01), 50.0), 1382.5);
    EXPECT_DOUBLE_EQ(generator_cost(gen(0.015), 40.0), 1108.0);
}

TEST(MarginalCost, Substitution) {
    EXPECT_DOUBLE_EQ(marginal_cost(gen(0.01), 0.0), 27.4);
    EXPECT_NEAR(marginal_cost(gen(0.01), 49.0), 27.89, 1e-12);
    EXPECT_NEAR(marginal_cost(gen(0.015), 50.0), 28.15, 1e-12);
}

TEST(MarginalCost, StrictlyIncreasing) {
    for (double C : kReferenceQuadCosts)
        for (double a = 0.0; a < 50.0; a += 2.5) EXPECT_LT(marginal_cost(gen(C), a), marginal_cost(gen(C), a + 0.1));
}

TEST(MarginalCost, IsDerivativeOfCost) {
    for (double C : kReferenceQuadCosts)
        for (double g = 1.0; g < 50.0; g += 7.0) {
            const double h = 1e-6;
            const double fd = (generator_cost(gen(C), g + h) - generator_cost(gen(C), g - h)) / (2 * h);
            EXPECT_NEAR(fd, marginal_cost(gen(C), g), 1e-6 * marginal_cost(gen(C), g));
        }
}

TEST(ProjectBox, ClampsAndIsIdempotent) {
    EXPECT_EQ(project_box(5, 0, 50), 5);
    EXPECT_EQ(project_box(-3, 0, 50), 0);
    EXPECT_EQ(project_box(61, 0, 50), 50);
    for (double x : {-10.0, 0.0, 12.5, 50.0, 80.0})
        EXPECT_EQ(project_box(project_box(x, 0, 50), 0, 50), project_box(x, 0, 50));
    EXPECT_THROW(project_box(1, 2, 1), Error);
}

TEST(ValidateConfig, ReferenceFleetIsValid) {
    EXPECT_TRUE(validate_config(reference_config()).empty());
}

TEST(ValidateConfig, ZeroQuadCost) {
    auto cfg = reference_config();
    cfg.generators[1].quad_cost = 0.0;
    const auto errs = validate_config(cfg);
    EXPECT_TRUE(has_error(errs, "generator[2].quad_cost", "quad_cost must be > 0")) << errs.size();
}

TEST(ValidateConfig, SampleMustBeMultipleOfPhysicsStep) {
    auto cfg = reference_config();
    cfg.dt_sample = 0.3;
    EXPECT_TRUE(validate_config(cfg).empty());
    cfg.dt_sample = 0.27;
    EXPECT_TRUE(has_error(validate_config(cfg), "controller.dt_sample", "not an integer multiple"));
}

TEST(ValidateConfig, ReportsEveryError) {
    auto cfg = reference_config();
    cfg.generators[0].quad_cost = -1.0;
    cfg.generators[2].p_max = -5.0;
    cfg.grid.inertia = 0.0;
    cfg.dt_sample = 0.27;
    EXPECT_GE(validate_config(cfg).size(), 4u);
    EXPECT_THROW(require_valid(cfg), ConfigInvalid);
}

TEST(EffectiveEta, DefaultsToInverseQuadCost) {
    EXPECT_DOUBLE_EQ(effective_eta(gen(0.01)), 100.0);
    auto g = gen(0.01);
    g.eta = 3.0;
    EXPECT_DOUBLE_EQ(effective_eta(g), 3.0);
}

TEST(RegulationBox, RelativeToDayAhead) {
    auto cfg = reference_config();
    const auto box = regulation_box(cfg.generators);
    for (std::size_t i = 0; i < cfg.generators.size(); ++i) {
        EXPECT_DOUBLE_EQ(box.lo[i], -cfg.generators[i].p_star);
        EXPECT_DOUBLE_EQ(box.hi[i], 50.0 - cfg.generators[i].p_star);
    }
}
