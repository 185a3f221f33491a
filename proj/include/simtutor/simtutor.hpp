#pragma once

#include <simtutor/errors.hpp>
#include <simtutor/kb.hpp>
#include <simtutor/learner.hpp>
#include <simtutor/pedagogy.hpp>
#include <simtutor/random.hpp>
#include <simtutor/record_store.hpp>
#include <simtutor/service.hpp>
#include <simtutor/session.hpp>
#include <simtutor/sim.hpp>
