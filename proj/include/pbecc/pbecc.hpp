#pragma once

#include "pbecc/sim/event_queue.hpp"
#include "pbecc/sim/packet.hpp"
#include "pbecc/sim/rng.hpp"
#include "pbecc/sim/time.hpp"
#include "pbecc/sim/wired_link.hpp"

#include "pbecc/mac/base_station.hpp"
#include "pbecc/mac/carrier_aggregation.hpp"
#include "pbecc/mac/harq.hpp"
#include "pbecc/mac/reorder.hpp"
#include "pbecc/mac/scheduler.hpp"
#include "pbecc/mac/tb_error.hpp"
#include "pbecc/mac/types.hpp"

#include "pbecc/ctrl/observer.hpp"

#include "pbecc/est/bottleneck.hpp"
#include "pbecc/est/capacity.hpp"
#include "pbecc/est/client.hpp"
#include "pbecc/est/delay_tracker.hpp"
#include "pbecc/est/feedback.hpp"
#include "pbecc/est/translate.hpp"

#include "pbecc/cc/aimd_sender.hpp"
#include "pbecc/cc/bbr_sender.hpp"
#include "pbecc/cc/cbr_sender.hpp"
#include "pbecc/cc/controller.hpp"
#include "pbecc/cc/filters.hpp"
#include "pbecc/cc/gain_cycle.hpp"
#include "pbecc/cc/pbe_sender.hpp"
#include "pbecc/cc/rate_sampler.hpp"

#include "pbecc/harness/io.hpp"
#include "pbecc/harness/metrics.hpp"
#include "pbecc/harness/scenario.hpp"
#include "pbecc/harness/simulation.hpp"
