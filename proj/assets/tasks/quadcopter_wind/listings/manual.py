def reward_function(target_pos, robot_pos, robot_ros, robot_linvel, robot_angvel)
	
	robot_target_dist = torch.norm(target_pos - target_pos , p=2, dim=-1)
	dist_reward = 5.0 * 1.0/(1.0+robot_target_dist)
	
	height_reward = 1.0 * torch.where(root_positions[:,2]<=3.0, torch.where(root_positions[:,2]>=0.8, 1.0, 0.0), 0.0)

	angular_penalty = 0.2 * torch.abs(robot_angvel).sum(-1)

	wind_reward = torch.where(robot_linvel[:,0]<=0.5, 1.0, 0.0)
	
	action_penalty = 0.1 * (1.0 - torch.abs(self.actions).sum(-1)/2.0)

	return dist_reward + height_reward + wind_reward - angular_penalty - action_penalty

