# Experiment recipes for dnls-lab
