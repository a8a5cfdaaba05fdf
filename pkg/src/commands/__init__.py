from src.commands import data_commands, training_commands, validation_commands

COMMAND_MODULES = [data_commands, training_commands, validation_commands]

__all__ = ["COMMAND_MODULES"]
