#pragma once

#include "sdiff/charge_bath.hpp"
#include "sdiff/correlator.hpp"
#include "sdiff/emitter.hpp"
#include "sdiff/event_stream.hpp"
#include "sdiff/inference.hpp"
#include "sdiff/least_squares.hpp"
#include "sdiff/ou.hpp"
#include "sdiff/parallel.hpp"
#include "sdiff/pulse_sim.hpp"
#include "sdiff/rc_stats.hpp"
#include "sdiff/rng.hpp"
#include "sdiff/spin_mixing.hpp"
