// Copyright 2026 The lmp2 Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lmp2/value_match.h"

#include "gtest/gtest.h"

namespace lmp2 {
namespace {

TEST(MatchTest, TextEqualityAfterNormalization) {
  EXPECT_TRUE(match_prediction("ginny", {"Ginny"}, ValueFormat::kText));
  EXPECT_FALSE(match_prediction("paris", {"London", "Berlin"}, ValueFormat::kText));
  EXPECT_TRUE(match_prediction("berlin", {"London", "Berlin"}, ValueFormat::kText));
  EXPECT_FALSE(match_prediction("", {""}, ValueFormat::kText));
}

TEST(MatchTest, DatesCompareCanonically) {
  EXPECT_TRUE(match_prediction("03/05/1999", {"1999-05-03"}, ValueFormat::kDate));
  EXPECT_TRUE(match_prediction("3 may 1999", {"1999-05-03"}, ValueFormat::kDate));
  EXPECT_TRUE(match_prediction("may 3rd, 1999", {"1999-05-03"}, ValueFormat::kDate));
  EXPECT_FALSE(match_prediction("04/05/1999", {"1999-05-03"}, ValueFormat::kDate));
  // Text formats never parse dates.
  EXPECT_FALSE(match_prediction("03/05/1999", {"1999-05-03"}, ValueFormat::kText));
}

TEST(CanonicalDateTest, Forms) {
  EXPECT_EQ(canonical_date("1999-05-03"), "1999-05-03");
  EXPECT_EQ(canonical_date("03.05.1999"), "1999-05-03");
  EXPECT_EQ(canonical_date("3rd of May 1999"), "1999-05-03");
  EXPECT_EQ(canonical_date("29/02/2000"), "2000-02-29");
  EXPECT_EQ(canonical_date("29/02/1999"), std::nullopt);
  EXPECT_EQ(canonical_date("yesterday"), std::nullopt);
}

TEST(MatchTest, NumbersIgnoreFormatting) {
  EXPECT_TRUE(match_prediction("$1,200,000", {"1200000"}, ValueFormat::kNumber));
  EXPECT_TRUE(match_prediction("180 cm", {"180"}, ValueFormat::kNumber));
  EXPECT_FALSE(match_prediction("181", {"180"}, ValueFormat::kNumber));
  EXPECT_EQ(numeric_value("~3.5 kg"), 3.5);
  EXPECT_EQ(numeric_value("none"), std::nullopt);
}

TEST(MatchTest, PhonesCompareDigits) {
  EXPECT_TRUE(match_prediction("+44 20 7946 0018", {"+442079460018"},
                               ValueFormat::kPhone));
  EXPECT_FALSE(match_prediction("+44 20 7946 0019", {"+442079460018"},
                                ValueFormat::kPhone));
  EXPECT_EQ(phone_digits("(555) 010-2030"), "5550102030");
}

}  // namespace
}  // namespace lmp2
