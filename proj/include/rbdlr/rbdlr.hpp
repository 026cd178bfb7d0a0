#pragma once

#include "rbdlr/blockdiag.hpp"
#include "rbdlr/eval.hpp"
#include "rbdlr/objective.hpp"
#include "rbdlr/solver.hpp"
#include "rbdlr/synth.hpp"
#include "rbdlr/types.hpp"
