def reward_function(ball_pos, ball_vel, tray_pos, tray_rot):

    # 1st reward ball to tool center distance
    ball_center_dist = torch.norm(tool_pos - ball_pos, p=2, dim=-1)
    ball_center_XY_dist = torch.norm(tool_pos[:,0:3] - ball_pos[:,0:3], p=2, dim=-1)
    center_dist_reward = 1.0/(1.0+ball_center_dist*100)

    # 2nd reward: ball is unmoved
    norm_ball_linvel = torch.norm(ball_linvels, p=2, dim=-1)  
    ball_vel_reward = 1.0/(1.0+norm_ball_linvel*100)

    # 3rd reward: rotation not too much
    rot_diff = torch.norm(tool_rot - self.default_tool_rot, p=2, dim=-1)
    tool_rot_reward = 1.0/(1.0+rot_diff)

    # action penalty
    action_penalty = torch.sum(self.actions[:,0:7] ** 2, dim=-1)
    action_penalty = 1 - 1.0 / (1.0 + action_penalty)

    # liveness_reward
    liveness_reward = torch.where(ball_center_XY_dist<0.03, torch.ones_like(center_dist_reward), torch.zeros_like(center_dist_reward))

    # final cumulative reward
    final_reward = 1.0*center_dist_reward + 1.0*ball_vel_reward + 0.0*tool_rot_reward + 0.5*liveness_reward - 0.01*action_penalty

