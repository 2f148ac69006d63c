// Copyright 2026 The Lightfield Authors
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

#include <random>

#include <gtest/gtest.h>

#include "lightfield/lightmodel.hpp"
#include "support.hpp"

namespace {

using namespace lightfield;

TEST(Attenuate, MatchesDirectFormula) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(0.0, 500.0), c(0.0, 2.0);
  for (int i = 0; i < 500; ++i) {
    const AttenuationParams p{16.0, c(rng), c(rng), 0.1};
    const double dist = d(rng);
    EXPECT_NEAR(attenuate(dist, p), lftest::attenuation_oracle(dist, 16.0, p.c1, p.c2), 1e-12);
  }
}

TEST(Attenuate, FullIntensityAtZero) {
  for (const auto& prof : kProfiles) EXPECT_EQ(attenuate(0.0, prof.params), 16.0);
}

TEST(Attenuate, MonotoneNonIncreasing) {
  const AttenuationParams p = profile_params(3);
  double prev = attenuate(0.0, p);
  for (double d = 0.5; d < 1000.0; d += 0.5) {
    const double v = attenuate(d, p);
    EXPECT_LE(v, prev);
    prev = v;
  }
}

TEST(Attenuate, NonAttenuatingLampNeverDims) {
  const AttenuationParams p{16.0, 0.0, 0.0, 0.1};
  EXPECT_TRUE(p.non_attenuating());
  EXPECT_EQ(attenuate(1e6, p), 16.0);
}

TEST(Attenuate, NegativeDistanceRejected) {
  try {
    attenuate(-1.0, profile_params(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NegativeDistance);
  }
}

TEST(Attenuate, HeadlineParametersGiveTwentyPercentAtFiftyMeters) {
  EXPECT_NEAR(attenuate(50.0, {16.0, 0.65, 0.03, 0.1}) / 16.0, 0.2, 1e-12);
  EXPECT_NEAR(attenuate(50.0, {16.0, 0.03, 0.154, 0.1}) / 16.0, 0.2, 1e-12);
}

TEST(Profiles, TableRows) {
  const double c1[5] = {0.01, 0.03, 0.06, 0.10, 0.90};
  const double c2[5] = {0.03, 0.03, 0.03, 0.03, 0.60};
  for (int id = 1; id <= 5; ++id) {
    const auto& p = profile(id);
    EXPECT_EQ(p.id, id);
    EXPECT_EQ(p.params.i0, 16.0);
    EXPECT_EQ(p.params.c1, c1[id - 1]);
    EXPECT_EQ(p.params.c2, c2[id - 1]);
  }
  EXPECT_THROW(profile(0), Error);
  EXPECT_THROW(profile(6), Error);
}

TEST(Profiles, Profile5FallsOffFastest) {
  for (double d : {10.0, 50.0, 200.0}) {
    for (int id = 1; id < 5; ++id) EXPECT_LT(attenuate(d, profile_params(5)), attenuate(d, profile_params(id)));
  }
}

TEST(Sqm, Endpoints) {
  EXPECT_EQ(intensity_to_sqm(0.0, 16.0), 22.0);
  EXPECT_EQ(intensity_to_sqm(16.0, 16.0), 16.0);
  EXPECT_EQ(intensity_to_sqm(32.0, 16.0), 16.0);
  EXPECT_EQ(intensity_to_sqm(8.0, 16.0), 19.0);
  EXPECT_THROW(intensity_to_sqm(1.0, 0.0), Error);
}

TEST(Sqm, NormalizedBrightnessInverts) {
  EXPECT_EQ(normalized_brightness(22.0), 0.0);
  EXPECT_EQ(normalized_brightness(16.0), 1.0);
  EXPECT_EQ(normalized_brightness(10.0), 1.0);
  EXPECT_EQ(normalized_brightness(25.0), 0.0);
  for (double v = 0.0; v <= 16.0; v += 0.25) {
    EXPECT_NEAR(normalized_brightness(intensity_to_sqm(v, 16.0)), v / 16.0, 1e-12);
  }
}

TEST(LightSource, ProfileConsistency) {
  LightSource s = make_source("a", {30.0, -81.0}, 2);
  EXPECT_TRUE(s.profile_consistent());
  s.params.c1 = 0.5;
  EXPECT_FALSE(s.profile_consistent());
  s.profile_id.reset();
  EXPECT_TRUE(s.profile_consistent());
}

TEST(AttenuationParams, ValidateRejectsNegativeCoefficients) {
  EXPECT_THROW(validate(AttenuationParams{16.0, -0.1, 0.0, 0.1}), Error);
  EXPECT_THROW(validate(AttenuationParams{0.0, 0.1, 0.0, 0.1}), Error);
  EXPECT_NO_THROW(validate(AttenuationParams{16.0, 0.0, 0.0, 0.1}));
}

}  // namespace
