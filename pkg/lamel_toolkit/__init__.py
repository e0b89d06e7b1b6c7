# LAMeL Toolkit Package
# Linear meta-learning over ridge regression with graphlet fingerprints

__version__ = '1.0.0'
