# Fitness evaluators package