#pragma once

#include "quaffure/body.hpp"
#include "quaffure/config.hpp"
#include "quaffure/drape.hpp"
#include "quaffure/evaluate.hpp"
#include "quaffure/fixtures.hpp"
#include "quaffure/groom.hpp"
#include "quaffure/groom_io.hpp"
#include "quaffure/kinematics.hpp"
#include "quaffure/material.hpp"
#include "quaffure/math.hpp"
#include "quaffure/neural.hpp"
#include "quaffure/parallel.hpp"
#include "quaffure/potentials.hpp"
#include "quaffure/solvers.hpp"
#include "quaffure/spatial.hpp"
