"""
Exception hierarchy shared by every taskseer package
"""


class TaskseerError(Exception):
    """Base class for data and contract errors (CLI exit code 2)"""


class UsageError(TaskseerError):
    """Bad command line or missing required option (CLI exit code 1)"""


class ConfigError(UsageError):
    """Invalid configuration value"""
