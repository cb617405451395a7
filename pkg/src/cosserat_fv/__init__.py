"""TPSA and mixed finite element discretizations of Cosserat and linear elastic media."""

__version__ = "0.1.0"
