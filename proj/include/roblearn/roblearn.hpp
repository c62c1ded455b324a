#pragma once

#include "roblearn/boosting.hpp"
#include "roblearn/core.hpp"
#include "roblearn/data.hpp"
#include "roblearn/error.hpp"
#include "roblearn/learners.hpp"
#include "roblearn/oracles.hpp"
#include "roblearn/random.hpp"
#include "roblearn/reductions.hpp"
#include "roblearn/redaction.hpp"
#include "roblearn/results.hpp"
#include "roblearn/source.hpp"
