// Python bindings. State trees cross the boundary as nested dicts of numpy
// arrays (lists and tuples become "0"/"1"/... nodes); streaming accumulators
// are wrapped as small mutable objects over the functional core.

#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chainkit/hmc.hpp"
#include "chainkit/optimize.hpp"
#include "chainkit/potential.hpp"
#include "chainkit/random.hpp"
#include "chainkit/reparam.hpp"
#include "chainkit/stats.hpp"
#include "chainkit/targets.hpp"
#include "chainkit/trace.hpp"

namespace py = pybind11;
namespace ck = chainkit;

namespace {

ck::Array array_from_py(py::handle obj) {
  auto arr = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(obj);
  if (!arr) throw py::type_error("expected an array-like of floats");
  ck::Shape shape(static_cast<std::size_t>(arr.ndim()));
  for (py::ssize_t i = 0; i < arr.ndim(); ++i) {
    shape[static_cast<std::size_t>(i)] = static_cast<std::size_t>(arr.shape(i));
  }
  std::vector<double> data(arr.data(), arr.data() + arr.size());
  return ck::Array(std::move(shape), std::move(data));
}

py::array_t<double> array_to_py(const ck::Array& a) {
  std::vector<py::ssize_t> shape(a.shape().begin(), a.shape().end());
  py::array_t<double> out(shape);
  std::copy(a.data().begin(), a.data().end(), out.mutable_data());
  return out;
}

ck::Tree tree_from_py(py::handle obj) {
  if (py::isinstance<py::dict>(obj)) {
    std::vector<ck::TreeField> fields;
    for (auto item : py::reinterpret_borrow<py::dict>(obj)) {
      fields.push_back({item.first.cast<std::string>(), tree_from_py(item.second)});
    }
    return ck::Tree::node(std::move(fields));
  }
  if (py::isinstance<py::list>(obj) || py::isinstance<py::tuple>(obj)) {
    std::vector<ck::Tree> items;
    for (auto item : py::reinterpret_borrow<py::sequence>(obj)) {
      items.push_back(tree_from_py(item));
    }
    return ck::Tree::tuple(std::move(items));
  }
  return ck::Tree(array_from_py(obj));
}

py::object tree_to_py(const ck::Tree& t) {
  if (t.is_leaf()) return array_to_py(t.array());
  py::dict out;
  for (std::size_t i = 0; i < t.num_children(); ++i) {
    out[py::str(t.child_name(i))] = tree_to_py(t.child(i));
  }
  return out;
}

ck::TraceMask mask_from_py(py::handle obj) {
  if (py::isinstance<py::bool_>(obj)) return ck::TraceMask(obj.cast<bool>());
  if (py::isinstance<py::dict>(obj)) {
    std::vector<std::pair<std::string, ck::TraceMask>> children;
    for (auto item : py::reinterpret_borrow<py::dict>(obj)) {
      children.emplace_back(item.first.cast<std::string>(), mask_from_py(item.second));
    }
    return ck::TraceMask::node(std::move(children));
  }
  throw py::type_error("trace mask must be a bool or a dict of masks");
}

class Potential {
 public:
  explicit Potential(ck::PotentialFn fn) : fn_(std::move(fn)) {}

  py::tuple call(py::handle state) const {
    const ck::PotentialResult res = fn_(tree_from_py(state));
    return py::make_tuple(array_to_py(res.log_density), tree_to_py(res.grad),
                          tree_to_py(res.extra));
  }

  const ck::PotentialFn& fn() const { return fn_; }

 private:
  ck::PotentialFn fn_;
};

ck::PotentialFn potential_from_callable(py::function f) {
  return [f = std::move(f)](const ck::Tree& x) {
    py::sequence out = f(tree_to_py(x)).cast<py::sequence>();
    ck::PotentialResult res;
    res.log_density = array_from_py(out[0]);
    res.grad = tree_from_py(out[1]);
    res.extra = py::len(out) > 2 ? tree_from_py(out[2]) : ck::Tree();
    return res;
  };
}

ck::LossFn loss_from_callable(py::function f) {
  return [f = std::move(f)](const ck::Tree& x) {
    py::sequence out = f(tree_to_py(x)).cast<py::sequence>();
    ck::LossResult res;
    res.loss = array_from_py(out[0]);
    res.grad = tree_from_py(out[1]);
    res.extra = py::len(out) > 2 ? tree_from_py(out[2]) : ck::Tree();
    return res;
  };
}

class HmcStateHandle {
 public:
  explicit HmcStateHandle(ck::HmcState state) : state_(std::move(state)) {}

  py::object state() const { return tree_to_py(state_.state); }
  py::object state_grads() const { return tree_to_py(state_.state_grads); }
  py::array_t<double> target_log_prob() const { return array_to_py(state_.target_log_prob); }
  py::object state_extra() const { return tree_to_py(state_.state_extra); }

  const ck::HmcState& raw() const { return state_; }

 private:
  ck::HmcState state_;
};

class RunningMean {
 public:
  explicit RunningMean(py::handle prototype)
      : state_(ck::running_mean_init(tree_from_py(prototype))) {}
  explicit RunningMean(ck::RunningMeanState state) : state_(std::move(state)) {}

  void update(py::handle x, std::optional<int> axis) {
    state_ = ck::running_mean_step(state_, tree_from_py(x), axis).first;
  }
  py::object value() const { return tree_to_py(ck::running_mean(state_)); }
  double count() const { return state_.count; }
  RunningMean merge(const RunningMean& other) const {
    return RunningMean(ck::merge(state_, other.state_));
  }

 private:
  ck::RunningMeanState state_;
};

class RunningVariance {
 public:
  explicit RunningVariance(py::handle prototype)
      : state_(ck::running_variance_init(tree_from_py(prototype))) {}
  explicit RunningVariance(ck::RunningVarianceState state) : state_(std::move(state)) {}

  void update(py::handle x, std::optional<int> axis) {
    state_ = ck::running_variance_step(state_, tree_from_py(x), axis).first;
  }
  py::object mean() const { return tree_to_py(state_.mean); }
  py::object value(bool sample) const { return tree_to_py(ck::running_variance(state_, sample)); }
  double count() const { return state_.count; }
  RunningVariance merge(const RunningVariance& other) const {
    return RunningVariance(ck::merge(state_, other.state_));
  }

 private:
  ck::RunningVarianceState state_;
};

class RunningCovariance {
 public:
  explicit RunningCovariance(py::handle prototype)
      : state_(ck::running_covariance_init(tree_from_py(prototype))) {}
  explicit RunningCovariance(ck::RunningCovState state) : state_(std::move(state)) {}

  void update(py::handle x, std::optional<int> axis) {
    state_ = ck::running_covariance_step(state_, tree_from_py(x), axis).first;
  }
  py::object mean() const { return tree_to_py(state_.mean); }
  py::object value(bool sample) const {
    return tree_to_py(ck::running_covariance(state_, sample));
  }
  double count() const { return state_.count; }
  RunningCovariance merge(const RunningCovariance& other) const {
    return RunningCovariance(ck::merge(state_, other.state_));
  }

 private:
  ck::RunningCovState state_;
};

class Ewma {
 public:
  Ewma(double decay, py::handle prototype)
      : state_(ck::ewma_init(decay, tree_from_py(prototype))) {}

  void update(py::handle x) { state_ = ck::ewma_step(state_, tree_from_py(x)).first; }
  py::object value() const { return tree_to_py(ck::ewma_debiased(state_)); }
  double count() const { return state_.count; }

 private:
  ck::EwmaState state_;
};

class PotentialScaleReduction {
 public:
  explicit PotentialScaleReduction(py::handle chain_prototype)
      : state_(ck::potential_scale_reduction_init(tree_from_py(chain_prototype))) {}

  void update(py::handle x) {
    state_ = ck::potential_scale_reduction_step(state_, tree_from_py(x)).first;
  }
  py::object value() const { return tree_to_py(ck::potential_scale_reduction_extract(state_)); }
  double count() const { return state_.count; }

 private:
  ck::RhatState state_;
};

class AutoCovariance {
 public:
  AutoCovariance(std::size_t max_lag, py::handle prototype)
      : state_(ck::auto_covariance_init(max_lag, tree_from_py(prototype))) {}

  void update(py::handle x) {
    state_ = ck::auto_covariance_step(state_, tree_from_py(x)).first;
  }
  py::object value() const { return tree_to_py(ck::auto_covariance_extract(state_)); }
  py::object effective_sample_size() const {
    return tree_to_py(ck::effective_sample_size(state_));
  }
  std::size_t count() const { return state_.count; }

 private:
  ck::AutoCovState state_;
};

class GradientDescent {
 public:
  explicit GradientDescent(py::handle initial)
      : state_(ck::gradient_descent_init(tree_from_py(initial))) {}

  py::array_t<double> step(py::function loss, double learning_rate) {
    auto [next, extra] =
        ck::gradient_descent_step(state_, loss_from_callable(std::move(loss)), learning_rate);
    state_ = std::move(next);
    return array_to_py(extra.loss);
  }
  py::object state() const { return tree_to_py(state_.state); }

 private:
  ck::GradientDescentState state_;
};

class Adam {
 public:
  explicit Adam(py::handle initial) : state_(ck::adam_init(tree_from_py(initial))) {}

  py::array_t<double> step(py::function loss, double learning_rate, double beta1,
                           double beta2, double epsilon) {
    auto [next, extra] = ck::adam_step(state_, loss_from_callable(std::move(loss)),
                                       learning_rate, beta1, beta2, epsilon);
    state_ = std::move(next);
    return array_to_py(extra.loss);
  }
  py::object state() const { return tree_to_py(state_.state); }
  std::int64_t t() const { return state_.t; }

 private:
  ck::AdamState state_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Composable Markov chain kernels: HMC pieces, tracing, streaming statistics";

  py::class_<ck::RngKey>(m, "RngKey")
      .def(py::self == py::self)
      .def("__repr__", [](const ck::RngKey& k) {
        char buf[48];
        std::snprintf(buf, sizeof(buf), "RngKey(0x%016llx%016llx)",
                      static_cast<unsigned long long>(k.hi),
                      static_cast<unsigned long long>(k.lo));
        return std::string(buf);
      });
  m.def("key_from_seed", &ck::key_from_seed, py::arg("seed"));
  m.def("split", [](const ck::RngKey& key) {
    auto [a, b] = ck::split(key);
    return py::make_tuple(a, b);
  });
  m.def("uniform_sample", [](const ck::RngKey& key, const std::vector<std::size_t>& shape) {
    return array_to_py(ck::uniform_sample(key, shape));
  });
  m.def("normal_sample", [](const ck::RngKey& key, const std::vector<std::size_t>& shape) {
    return array_to_py(ck::normal_sample(key, shape));
  });

  py::class_<Potential>(m, "Potential")
      .def("__call__", &Potential::call, py::arg("state"));
  m.def("potential_from_function", [](py::function f) {
    return Potential(potential_from_callable(std::move(f)));
  });
  m.def("finite_diff_grad",
        [](py::function f, py::handle x, double h) {
          ck::ScalarPerChainFn fn = [f = std::move(f)](const ck::Tree& t) {
            return array_from_py(f(tree_to_py(t)));
          };
          return tree_to_py(ck::finite_diff_grad(fn, tree_from_py(x), h));
        },
        py::arg("f"), py::arg("x"), py::arg("h") = 1e-5);

  m.def("standard_normal_target", [](std::size_t num_batch_dims) {
    return Potential(ck::make_standard_normal_target(num_batch_dims));
  }, py::arg("num_batch_dims") = 1);
  m.def("diagonal_gaussian_target",
        [](py::handle mean, py::handle scale, std::size_t num_batch_dims) {
          return Potential(ck::make_diagonal_gaussian_target(
              tree_from_py(mean), tree_from_py(scale), num_batch_dims));
        },
        py::arg("mean"), py::arg("scale"), py::arg("num_batch_dims") = 1);
  m.def("logistic_regression_target", [](py::handle features, py::handle labels) {
    return Potential(ck::make_logistic_regression_target(array_from_py(features),
                                                         array_from_py(labels)));
  }, py::arg("features"), py::arg("labels"));
  m.def("generate_dataset", [](std::uint64_t seed, std::size_t n, std::size_t d) {
    const ck::LogisticRegressionData data = ck::generate_dataset(seed, n, d);
    py::dict out;
    out["features"] = array_to_py(data.features);
    out["labels"] = array_to_py(data.labels);
    out["true_weights"] = array_to_py(data.true_weights);
    return out;
  }, py::arg("seed"), py::arg("n"), py::arg("d"));

  py::class_<HmcStateHandle>(m, "HmcState")
      .def_property_readonly("state", &HmcStateHandle::state)
      .def_property_readonly("state_grads", &HmcStateHandle::state_grads)
      .def_property_readonly("target_log_prob", &HmcStateHandle::target_log_prob)
      .def_property_readonly("state_extra", &HmcStateHandle::state_extra);
  m.def("hmc_init", [](py::handle state, const Potential& target) {
    return HmcStateHandle(ck::hamiltonian_monte_carlo_init(tree_from_py(state), target.fn()));
  }, py::arg("state"), py::arg("target"));
  m.def("hmc_step",
        [](const HmcStateHandle& state, const Potential& target, double step_size,
           std::size_t num_integrator_steps, const ck::RngKey& key) {
          auto [next, extra] = ck::hamiltonian_monte_carlo_step(
              state.raw(), target.fn(), step_size, num_integrator_steps, key);
          py::dict info;
          info["is_accepted"] = array_to_py(extra.is_accepted);
          info["log_accept_ratio"] = array_to_py(extra.log_accept_ratio);
          return py::make_tuple(HmcStateHandle(std::move(next)), info);
        },
        py::arg("state"), py::arg("target"), py::arg("step_size"),
        py::arg("num_integrator_steps"), py::arg("key"));

  m.def("trace",
        [](py::object initial, py::function kernel, std::size_t num_steps, py::object mask) {
          const ck::TraceMask trace_mask =
              mask.is_none() ? ck::TraceMask::all(true) : mask_from_py(mask);
          auto result = ck::trace<py::object>(
              std::move(initial),
              [&kernel](py::object s) {
                py::sequence out = kernel(std::move(s)).cast<py::sequence>();
                return std::pair<py::object, ck::Tree>{out[0], tree_from_py(out[1])};
              },
              num_steps, trace_mask);
          return py::make_tuple(result.final_state, tree_to_py(result.traced));
        },
        py::arg("initial"), py::arg("kernel"), py::arg("num_steps"),
        py::arg("mask") = py::none());

  py::class_<ck::Diffeomorphism>(m, "Diffeomorphism")
      .def("forward",
           [](const ck::Diffeomorphism& d, py::handle y) {
             auto [x, extra] = d.forward(tree_from_py(y));
             return py::make_tuple(tree_to_py(x), tree_to_py(extra));
           })
      .def("inverse",
           [](const ck::Diffeomorphism& d, py::handle x) {
             return tree_to_py(d.inverse(tree_from_py(x)));
           })
      .def("forward_log_det_jacobian", [](const ck::Diffeomorphism& d, py::handle y) {
        return array_to_py(d.forward_log_det_jacobian(tree_from_py(y)));
      });
  m.def("identity_diffeomorphism", &ck::identity_diffeomorphism);
  m.def("affine_diffeomorphism", [](py::handle shift, py::handle scale) {
    return ck::affine_diffeomorphism(tree_from_py(shift), tree_from_py(scale));
  }, py::arg("shift"), py::arg("scale"));
  m.def("exp_diffeomorphism", &ck::exp_diffeomorphism);
  m.def("softplus_diffeomorphism", &ck::softplus_diffeomorphism);
  m.def("compose", &ck::compose, py::arg("outer"), py::arg("inner"));
  m.def("treewise", [](py::dict children) {
    std::vector<std::pair<std::string, ck::Diffeomorphism>> out;
    for (auto item : children) {
      out.emplace_back(item.first.cast<std::string>(),
                       item.second.cast<ck::Diffeomorphism>());
    }
    return ck::treewise(std::move(out));
  });
  m.def("reparameterize_potential",
        [](const Potential& target, const ck::Diffeomorphism& d, py::handle x0) {
          auto [fn, y0] = ck::reparameterize_potential_fn(target.fn(), d, tree_from_py(x0));
          return py::make_tuple(Potential(std::move(fn)), tree_to_py(y0));
        },
        py::arg("target"), py::arg("diffeomorphism"), py::arg("x0"));

  py::class_<RunningMean>(m, "RunningMean")
      .def(py::init<py::handle>(), py::arg("prototype"))
      .def("update", &RunningMean::update, py::arg("x"), py::arg("axis") = py::none())
      .def("value", &RunningMean::value)
      .def("merge", &RunningMean::merge)
      .def_property_readonly("count", &RunningMean::count);
  py::class_<RunningVariance>(m, "RunningVariance")
      .def(py::init<py::handle>(), py::arg("prototype"))
      .def("update", &RunningVariance::update, py::arg("x"), py::arg("axis") = py::none())
      .def("value", &RunningVariance::value, py::arg("sample") = false)
      .def("mean", &RunningVariance::mean)
      .def("merge", &RunningVariance::merge)
      .def_property_readonly("count", &RunningVariance::count);
  py::class_<RunningCovariance>(m, "RunningCovariance")
      .def(py::init<py::handle>(), py::arg("prototype"))
      .def("update", &RunningCovariance::update, py::arg("x"), py::arg("axis") = py::none())
      .def("value", &RunningCovariance::value, py::arg("sample") = false)
      .def("mean", &RunningCovariance::mean)
      .def("merge", &RunningCovariance::merge)
      .def_property_readonly("count", &RunningCovariance::count);
  py::class_<Ewma>(m, "Ewma")
      .def(py::init<double, py::handle>(), py::arg("decay"), py::arg("prototype"))
      .def("update", &Ewma::update, py::arg("x"))
      .def("value", &Ewma::value)
      .def_property_readonly("count", &Ewma::count);
  py::class_<PotentialScaleReduction>(m, "PotentialScaleReduction")
      .def(py::init<py::handle>(), py::arg("chain_prototype"))
      .def("update", &PotentialScaleReduction::update, py::arg("x"))
      .def("value", &PotentialScaleReduction::value)
      .def_property_readonly("count", &PotentialScaleReduction::count);
  py::class_<AutoCovariance>(m, "AutoCovariance")
      .def(py::init<std::size_t, py::handle>(), py::arg("max_lag"), py::arg("prototype"))
      .def("update", &AutoCovariance::update, py::arg("x"))
      .def("value", &AutoCovariance::value)
      .def("effective_sample_size", &AutoCovariance::effective_sample_size)
      .def_property_readonly("count", &AutoCovariance::count);

  py::class_<GradientDescent>(m, "GradientDescent")
      .def(py::init<py::handle>(), py::arg("initial"))
      .def("step", &GradientDescent::step, py::arg("loss"), py::arg("learning_rate"))
      .def_property_readonly("state", &GradientDescent::state);
  py::class_<Adam>(m, "Adam")
      .def(py::init<py::handle>(), py::arg("initial"))
      .def("step", &Adam::step, py::arg("loss"), py::arg("learning_rate"),
           py::arg("beta1") = 0.9, py::arg("beta2") = 0.999, py::arg("epsilon") = 1e-8)
      .def_property_readonly("state", &Adam::state)
      .def_property_readonly("t", &Adam::t);
}
