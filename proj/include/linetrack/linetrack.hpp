#pragma once

#include "linetrack/engine.hpp"
#include "linetrack/error.hpp"
#include "linetrack/evaluate.hpp"
#include "linetrack/image.hpp"
#include "linetrack/image_io.hpp"
#include "linetrack/object.hpp"
#include "linetrack/observation.hpp"
#include "linetrack/postprocess.hpp"
#include "linetrack/serialize.hpp"
#include "linetrack/synthetic.hpp"
#include "linetrack/tracker.hpp"
