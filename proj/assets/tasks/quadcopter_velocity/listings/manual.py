def reward_function(target_vel, robot_pos, robot_ros, robot_linvel, robot_angvel)
	
	velocity_dev = torch.norm(target_vel - robot_linvel , p=2, dim=-1)
	velocity_reward = 3.0 * 1.0/(1.0+velocity_dev)
	
	height_dev = torch.abs(robot_pos[:,2] - 1.0)
	height_reward = 0.5 * 1.0/(1.0+height_dev)

	angular_penalty = 0.1 * torch.abs(robot_angvel).sum(-1)
	
	action_penalty = 0.05 * (1.0 - torch.abs(self.actions).sum(-1)/2.0)

	return velocity_reward + height_reward - angular_penalty - action_penalty
