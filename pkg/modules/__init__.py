"""
Application Modules.

- mialab/: Membership inference laboratory (data, recommenders, difference
  vectors, attacks, experiment orchestration)
"""
