// Copyright 2026 The tfopt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "tfopt/transfer_function.hpp"
#include "tfopt/volume.hpp"

namespace tfopt {

/// n^3 field with two concentric Gaussian shells: an outer shell peaking at
/// 100 and an inner shell peaking at 200, near zero elsewhere.
ScalarField make_two_shell_volume(int n = 32);

/// Ground-truth TF for the two-shell volume: translucent warm outer shell,
/// denser cool inner shell, empty space transparent.
TFRealized two_shell_reference_tf(const ScalarField& field);

/// n^3 integer-valued field in [0, 255] loosely shaped like a potted tree:
/// air, a pot, a trunk and a noisy foliage crown.
ScalarField make_tree_volume(int n = 256);

}  // namespace tfopt
