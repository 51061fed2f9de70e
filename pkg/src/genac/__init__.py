"""Actor-critic learning with Shannon, Tsallis and Renyi entropy regularization.

Pure numpy: small MLPs with hand-written backpropagation, tanh-squashed
Gaussian policies, single-agent and ensemble learners, toy environments, an
exact tabular policy-iteration engine and the supporting bound numerics.
"""

__version__ = "0.1.0"
