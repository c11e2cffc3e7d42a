import logging

from core.errors import EXIT_INVALID_INPUT


class CommandManager:
    def __init__(self, config):
        self.config = config
        self.logger = logging.getLogger(__name__)
        self.commands = {}

    async def initialize(self):
        from commands.forward_command import ForwardCommand
        from commands.fu_command import FuCommand
        from commands.reconstruct_command import ReconstructCommand
        from commands.roundtrip_command import RoundtripCommand
        from commands.verify_command import VerifyCommand

        self.commands = {
            "forward": ForwardCommand(),
            "fu": FuCommand(),
            "reconstruct": ReconstructCommand(),
            "roundtrip": RoundtripCommand(),
            "verify": VerifyCommand(),
        }
        self.logger.debug("CommandManager initialized.")

    async def get_available_commands(self):
        return list(self.commands.keys())

    async def handle_command(self, command_name, args):
        command = self.commands.get(command_name)
        if command:
            self.logger.info(f"▶️ Running {command_name} (n={self.config.n}, seed={self.config.seed})")
            return await command.run(self.config, args)
        return {"success": False, "response": f"Command '{command_name}' not found.", "exit_code": EXIT_INVALID_INPUT}
