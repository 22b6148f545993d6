"""Small version of the random-triplet comparison (the CLI runs the full one).

    python demos/triplet_experiment.py [TRIALS]
"""
import sys

from pathcomplete.experiments import run_experiment

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 200
rep = run_experiment(trials)
print(rep.summary())
