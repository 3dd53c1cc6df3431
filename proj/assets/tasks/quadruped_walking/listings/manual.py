reward_function(target_pos, robot_pos, robot_ros, robot_linvel)
	
	robot_target_dist = torch.norm(robot_linvel[:,0:2] - target_pos[:,0:2] , p=2, dim=-1)
	dist_reward = 10 * 1.0/(1.0+robot_target_dist)
	
	height_reward = 2.0 * torch.where(robot_pos[:,2] > 0.5, 1.0, 0.0)

	stability_reward = 0.5 * 1.0/(1.0 + torch.norm(robot_linvel, p=2, dim=-1))
	
	action_penalty = 0.1 * (1.0 - torch.abs(self.actions).sum(-1)/2.0)

	return dist_reward + height_reward + stability_reward - action_penalty
